#include "respawn/features.hpp"

namespace respawn {

std::string_view feature_name(FeatureId id) {
  switch (id) {
    case FeatureId::kAcceptLanguage: return "accept_language";
    case FeatureId::kCanvas: return "canvas";
    case FeatureId::kDnt: return "dnt";
    case FeatureId::kGeolocation: return "geolocation";
    case FeatureId::kIp: return "ip";
    case FeatureId::kTimeZone: return "time_zone";
    case FeatureId::kUserAgent: return "user_agent";
    case FeatureId::kWebGl: return "webgl";
  }
  return "";
}

std::optional<FeatureId> feature_from_name(std::string_view name) {
  for (FeatureId id : kAllFeatures) {
    if (feature_name(id) == name) return id;
  }
  return std::nullopt;
}

FeatureChannel feature_channel(FeatureId id) {
  switch (id) {
    case FeatureId::kIp:
      return FeatureChannel::kPassiveOnly;
    case FeatureId::kUserAgent:
    case FeatureId::kAcceptLanguage:
    case FeatureId::kDnt:
      return FeatureChannel::kActiveAndPassive;
    case FeatureId::kCanvas:
    case FeatureId::kGeolocation:
    case FeatureId::kWebGl:
    case FeatureId::kTimeZone:
      return FeatureChannel::kActiveOnly;
  }
  return FeatureChannel::kActiveOnly;
}

std::string feature_set_name(FeatureSet set) {
  std::string out;
  for (FeatureId id : kAllFeatures) {
    if (!set.contains(id)) continue;
    if (!out.empty()) out += '+';
    out += feature_name(id);
  }
  return out;
}

}  // namespace respawn
