#include "respawn/detection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "respawn/errors.hpp"

namespace respawn {

std::string_view exclusion_reason_name(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::kNotUserSpecific: return "not_user_specific";
    case ExclusionReason::kAbsentFromUserSpecific: return "absent_from_user_specific";
    case ExclusionReason::kNotReappearing: return "not_reappearing";
    case ExclusionReason::kNotInAllTestCrawls: return "not_in_all_test_crawls";
    case ExclusionReason::kAllOne: return "all_one";
    case ExclusionReason::kAllZero: return "all_zero";
  }
  return "";
}

std::optional<ExclusionReason> exclusion_reason_from_name(std::string_view name) {
  for (ExclusionReason r :
       {ExclusionReason::kNotUserSpecific, ExclusionReason::kAbsentFromUserSpecific,
        ExclusionReason::kNotReappearing, ExclusionReason::kNotInAllTestCrawls,
        ExclusionReason::kAllOne, ExclusionReason::kAllZero}) {
    if (exclusion_reason_name(r) == name) return r;
  }
  return std::nullopt;
}

std::vector<CookieRecord> candidate_respawned(const CrawlRecord& initial,
                                              const CrawlRecord& reappearance) {
  if (initial.website != reappearance.website) {
    throw DataError("candidate_respawned: crawl records are for different "
                    "websites ('" + initial.website + "' vs '" +
                    reappearance.website + "')");
  }
  std::vector<CookieRecord> out;
  for (const CookieRecord& c : initial.cookies) {
    const CookieRecord* again = reappearance.find_cookie(c.host, c.key);
    if (again != nullptr && again->value == c.value) out.push_back(c);
  }
  return out;
}

UserSpecificFilter filter_user_specific(const std::vector<CookieRecord>& candidates,
                                        const CrawlRecord& initial_a,
                                        const CrawlRecord& user_specific_b) {
  if (initial_a.website != user_specific_b.website) {
    throw DataError("filter_user_specific: crawl records are for different "
                    "websites");
  }
  UserSpecificFilter out;
  for (const CookieRecord& c : candidates) {
    const CookieRecord* on_b = user_specific_b.find_cookie(c.host, c.key);
    if (on_b == nullptr) {
      out.removed.emplace_back(c, ExclusionReason::kAbsentFromUserSpecific);
    } else if (on_b->value == c.value) {
      out.removed.emplace_back(c, ExclusionReason::kNotUserSpecific);
    } else {
      out.kept.push_back(c);
    }
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> observation_vector(
    const CookieRecord& initial_cookie, const std::vector<CrawlRecord>& crawls) {
  std::vector<std::uint8_t> bits;
  bits.reserve(crawls.size());
  for (const CrawlRecord& crawl : crawls) {
    const CookieRecord* c = crawl.find_cookie(initial_cookie.host,
                                              initial_cookie.key);
    if (c == nullptr) return std::nullopt;
    bits.push_back(c->value != initial_cookie.value ? 1 : 0);
  }
  return bits;
}

std::optional<ObservationSet> observation_set(const CrawlBundle& bundle,
                                              const CookieRecord& initial_cookie) {
  ObservationSet set;
  set.host = initial_cookie.host;
  set.key = initial_cookie.key;
  for (FeatureId f : kAllFeatures) {
    auto it = bundle.spoof.find(f);
    if (it == bundle.spoof.end()) return std::nullopt;
    auto bits = observation_vector(initial_cookie, it->second);
    if (!bits) return std::nullopt;
    set.spoof_obs.emplace(f, std::move(*bits));
  }
  auto control = observation_vector(initial_cookie, bundle.control);
  if (!control) return std::nullopt;
  set.control_obs = std::move(*control);
  return set;
}

PermutationOutcome permutation_test(const std::vector<std::uint8_t>& spoof_obs,
                                    const std::vector<std::uint8_t>& control_obs,
                                    int n_perm, Rng& rng) {
  if (spoof_obs.size() != control_obs.size() || spoof_obs.empty()) {
    throw std::invalid_argument(
        "permutation_test: observation vectors must be nonempty and of equal "
        "length");
  }
  if (n_perm < 1) throw std::invalid_argument("permutation_test: n_perm < 1");

  const int n = static_cast<int>(spoof_obs.size());
  const int spoof_ones = std::accumulate(spoof_obs.begin(), spoof_obs.end(), 0);
  const int control_ones =
      std::accumulate(control_obs.begin(), control_obs.end(), 0);
  const int total_ones = spoof_ones + control_ones;

  // t* >= t0 reduces to 2k >= spoof_ones - control_ones + total_ones, where k
  // is the number of ones relabeled into the spoof group. Comparing integers
  // keeps ties exact.
  const int threshold = spoof_ones - control_ones + total_ones;

  std::vector<std::uint8_t> pooled;
  pooled.reserve(2 * static_cast<std::size_t>(n));
  pooled.insert(pooled.end(), spoof_obs.begin(), spoof_obs.end());
  pooled.insert(pooled.end(), control_obs.begin(), control_obs.end());

  std::vector<std::uint8_t> buf(pooled.size());
  int extreme = 0;
  for (int perm = 0; perm < n_perm; ++perm) {
    buf = pooled;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          static_cast<std::size_t>(rng.below(buf.size() - static_cast<std::size_t>(i)));
      std::swap(buf[static_cast<std::size_t>(i)], buf[j]);
      k += buf[static_cast<std::size_t>(i)];
    }
    if (2 * k >= threshold) ++extreme;
  }

  PermutationOutcome out;
  out.spoof_ones = spoof_ones;
  out.control_ones = control_ones;
  out.t0 = static_cast<double>(spoof_ones - control_ones) / n;
  out.p = (1.0 + extreme) / (1.0 + n_perm);
  return out;
}

std::vector<DetectionResult> detect_feature_dependencies(
    const CrawlBundle& bundle, const DetectionParams& params) {
  const auto candidates = candidate_respawned(bundle.initial, bundle.reappearance);
  const auto filtered =
      filter_user_specific(candidates, bundle.initial, bundle.user_specific);

  auto find_removed = [&](const CookieRecord& c) -> const ExclusionReason* {
    for (const auto& [cookie, reason] : filtered.removed) {
      if (cookie.host == c.host && cookie.key == c.key) return &reason;
    }
    return nullptr;
  };
  auto is_kept = [&](const CookieRecord& c) {
    for (const CookieRecord& k : filtered.kept) {
      if (k.host == c.host && k.key == c.key) return true;
    }
    return false;
  };

  const Rng perm_base = Rng(params.seed).split("perm").split(bundle.website);

  std::vector<DetectionResult> out;
  for (const CookieRecord& cookie : bundle.initial.cookies) {
    DetectionResult result;
    result.website = bundle.website;
    result.cookie = cookie;

    if (const ExclusionReason* reason = find_removed(cookie)) {
      result.status = DetectionStatus::kExcluded;
      result.exclusion = *reason;
      out.push_back(std::move(result));
      continue;
    }
    if (!is_kept(cookie)) {
      result.status = DetectionStatus::kExcluded;
      result.exclusion = ExclusionReason::kNotReappearing;
      out.push_back(std::move(result));
      continue;
    }

    const auto obs =
        bundle.test_phase_present() ? observation_set(bundle, cookie) : std::nullopt;
    if (!obs) {
      result.status = DetectionStatus::kExcluded;
      result.exclusion = ExclusionReason::kNotInAllTestCrawls;
      out.push_back(std::move(result));
      continue;
    }

    int ones = std::accumulate(obs->control_obs.begin(), obs->control_obs.end(), 0);
    int bits = static_cast<int>(obs->control_obs.size());
    for (const auto& [f, vec] : obs->spoof_obs) {
      ones += std::accumulate(vec.begin(), vec.end(), 0);
      bits += static_cast<int>(vec.size());
    }
    if (ones == bits) {
      result.status = DetectionStatus::kExcluded;
      result.exclusion = ExclusionReason::kAllOne;
      out.push_back(std::move(result));
      continue;
    }
    if (ones == 0) {
      result.status = DetectionStatus::kExcluded;
      result.exclusion = ExclusionReason::kAllZero;
      out.push_back(std::move(result));
      continue;
    }

    const Rng cookie_base = perm_base.split(cookie.host).split(cookie.key);
    for (FeatureId f : kAllFeatures) {
      Rng stream = cookie_base.split(feature_name(f));
      const auto outcome = permutation_test(obs->spoof_obs.at(f),
                                            obs->control_obs, params.n_perm,
                                            stream);
      result.p_values.emplace(f, outcome.p);
      if (outcome.p < params.alpha) result.features.insert(f);
    }
    result.control_restored = std::accumulate(obs->control_obs.begin(),
                                              obs->control_obs.end(), 0) == 0;
    result.status = result.features.empty() ? DetectionStatus::kNotFeatureDependent
                                            : DetectionStatus::kFeatureDependent;
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace respawn
