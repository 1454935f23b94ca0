/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace emotrait {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMixFloor = 0.005;
constexpr double kMixCeil = 0.90;
}  // namespace

const std::array<TraitMarginal, kTraitCount>& reference_marginals() {
  // M/SD targets from the published descriptives. Truncation uses the family
  // plausibility windows rather than the published sample min/max: several
  // rows (e.g. ETH_L with M 1.06 above a sample floor of 1.50 but SD 1.31)
  // have no truncated normal on their sample range with those moments, since
  // a decreasing density slice always has sd below its mean-to-floor gap.
  static const std::array<TraitMarginal, kTraitCount> table = [] {
    const std::array<std::pair<double, double>, kTraitCount> targets = {{
        {0.64, 0.08},  {0.69, 0.06},  {0.54, 0.09}, {0.67, 0.07},  {0.61, 0.06},
        {2.56, 1.31},  {4.55, 1.23},  {3.25, 1.39}, {4.72, 1.34},  {3.33, 1.10},
        {4.81, 1.02},  {5.58, 1.07},  {2.72, 1.12}, {4.19, 1.35},  {3.99, 1.15},
        {0.77, 0.74},  {-1.20, 0.70}, {22.36, 3.93}, {22.13, 4.08}, {16.54, 4.30},
        {13.57, 4.45}, {11.93, 4.68},
    }};
    std::array<TraitMarginal, kTraitCount> out{};
    const TraitRanges ranges;
    for (int t = 0; t < kTraitCount; ++t) {
      const auto [lo, hi] = ranges.for_trait(static_cast<TraitKind>(t));
      out[static_cast<std::size_t>(t)] = {targets[static_cast<std::size_t>(t)].first,
                                          targets[static_cast<std::size_t>(t)].second, lo, hi};
    }
    return out;
  }();
  return table;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

struct TruncMoments {
  double mean;
  double sd;
};

TruncMoments truncated_moments(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  // stable mass of the slice: work on the complementary side for one-sided
  // tails so the cdf difference never cancels to zero
  double z;
  if (a > 0.0) {
    z = 0.5 * (std::erfc(a / std::sqrt(2.0)) - std::erfc(b / std::sqrt(2.0)));
  } else if (b < 0.0) {
    z = 0.5 * (std::erfc(-b / std::sqrt(2.0)) - std::erfc(-a / std::sqrt(2.0)));
  } else {
    z = normal_cdf(b) - normal_cdf(a);
  }
  z = std::max(z, 1e-300);
  const double pa = normal_pdf(a), pb = normal_pdf(b);
  const double mean = std::clamp(mu + sigma * (pa - pb) / z, lo, hi);
  const double var_factor =
      std::clamp(1.0 + (a * pa - b * pb) / z - ((pa - pb) / z) * ((pa - pb) / z), 1e-12, 1.0);
  return {mean, sigma * std::sqrt(var_factor)};
}

}  // namespace

std::pair<double, double> truncated_normal_match(double mean, double sd, double lo, double hi) {
  if (!(lo < hi) || !(sd > 0.0)) throw ValidationError("invalid trait marginal");
  if (!(mean > lo && mean < hi)) throw ValidationError("trait mean outside its bounds");

  // inner solve: the truncated mean is strictly increasing in mu
  auto match_mu = [&](double sigma) {
    double mu_lo = lo - 34.0 * sigma;  // keeps erfc/pdf in normal range
    double mu_hi = hi + 34.0 * sigma;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (mu_lo + mu_hi);
      (truncated_moments(mid, sigma, lo, hi).mean < mean ? mu_lo : mu_hi) = mid;
    }
    return 0.5 * (mu_lo + mu_hi);
  };

  // outer solve: along the mean-matched path the truncated sd grows with the
  // parent sigma, saturating at the interval's geometric limit
  double s_lo = 1e-3 * sd;
  double s_hi = 60.0 * (hi - lo);
  const double sd_at_max = truncated_moments(match_mu(s_hi), s_hi, lo, hi).sd;
  if (sd_at_max < sd * 0.98) {
    throw ValidationError("trait marginal (mean " + format_double(mean) + ", sd " +
                          format_double(sd) + ") is not attainable by a truncated normal on [" +
                          format_double(lo) + ", " + format_double(hi) + "]");
  }
  for (int i = 0; i < 90; ++i) {
    const double mid = 0.5 * (s_lo + s_hi);
    (truncated_moments(match_mu(mid), mid, lo, hi).sd < sd ? s_lo : s_hi) = mid;
  }
  const double sigma = 0.5 * (s_lo + s_hi);
  const double mu = match_mu(sigma);

  const auto achieved = truncated_moments(mu, sigma, lo, hi);
  if (std::abs(achieved.mean - mean) > 0.02 * sd || std::abs(achieved.sd - sd) > 0.02 * sd) {
    throw ValidationError("truncated normal matching failed for mean " + format_double(mean) +
                          ", sd " + format_double(sd));
  }
  const double accept = normal_cdf((hi - mu) / sigma) - normal_cdf((lo - mu) / sigma);
  if (accept < 1e-4) {
    throw ValidationError("truncated normal acceptance region is vanishingly small");
  }
  return {mu, sigma};
}

double sample_truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double v = mu + sigma * rng.normal();
    if (v >= lo && v <= hi) return v;
  }
  throw InvariantError("truncated normal rejection sampling failed to converge");
}

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

PlantSpec::PlantSpec() {
  // neutral-dominant default mixture for every video
  for (auto& b : baselines) {
    b.fill(0.10);
    b[static_cast<std::size_t>(EmotionKind::kNeutral)] = 0.40;
  }
}

void PlantSpec::validate() const {
  if (n_participants < 1) throw ValidationError("plant spec: n_participants must be >= 1");
  if (frame_rate_hz <= 0.0 || frame_rate_hz > 1000.0) {
    throw ValidationError("plant spec: frame rate must be in (0, 1000] Hz");
  }
  if (video_duration_s <= 0.0) throw ValidationError("plant spec: video duration must be positive");
  for (const auto& b : baselines) {
    double sum = 0.0;
    for (double v : b) {
      if (v <= 0.0) throw ValidationError("plant spec: baseline components must be positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("plant spec: baselines must sum to 1");
  }
  // per video, the jointly shifted emotions must stay inside the simplex
  // over the five-sigma envelope of each trait marginal (rarer draws are
  // clamped at generation time)
  for (int v = 1; v <= kVideoCount; ++v) {
    double shifted_max_total = 0.0;
    for (const auto& link : links) {
      if (link.feature.video != v) continue;
      const auto& m = marginals[static_cast<std::size_t>(static_cast<int>(link.trait))];
      const double z_lo = std::max((m.min - m.mean) / m.sd, -5.0);
      const double z_hi = std::min((m.max - m.mean) / m.sd, 5.0);
      const double base = baselines[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(static_cast<int>(link.feature.emotion))];
      const double shift_min = std::min(link.beta * z_lo, link.beta * z_hi) - 4.0 * link.sigma;
      const double shift_max = std::max(link.beta * z_lo, link.beta * z_hi) + 4.0 * link.sigma;
      const double lo = base + shift_min;
      const double hi = base + shift_max;
      if (lo < kMixFloor || hi > kMixCeil) {
        throw ValidationError("planted link " + std::string(trait_code(link.trait)) + " -> " +
                              feature_name(feature_index(link.feature)) +
                              " pushes the mean mixture off the simplex (range " +
                              format_double(lo) + ".." + format_double(hi) + ")");
      }
      shifted_max_total += hi;
    }
    if (shifted_max_total > 0.95) {
      throw ValidationError("planted links on video " + std::to_string(v) +
                            " jointly exceed the simplex budget");
    }
  }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

SynthCohort plant_cohort(const PlantSpec& spec) {
  spec.validate();

  // id width keeps lexicographic order equal to numeric order
  const int id_width = std::max<int>(4, static_cast<int>(std::to_string(spec.n_participants).size()));
  auto participant_id = [&](int i) {
    std::string digits = std::to_string(i);
    return "synth" + std::string(static_cast<std::size_t>(id_width) - digits.size(), '0') + digits;
  };

  const auto frames_per_video =
      static_cast<std::size_t>(std::llround(spec.video_duration_s * spec.frame_rate_hz));

  std::array<std::pair<double, double>, kTraitCount> matched{};
  for (int t = 0; t < kTraitCount; ++t) {
    const auto& m = spec.marginals[static_cast<std::size_t>(t)];
    matched[static_cast<std::size_t>(t)] = truncated_normal_match(m.mean, m.sd, m.min, m.max);
  }

  GroundTruth truth;
  truth.baselines = spec.baselines;
  for (const auto& link : spec.links) {
    // planted cells are held fixed during renormalization, so beta is the
    // exact slope; the only noise on the cell is the link's own sigma plus
    // the frame-jitter average
    const double base = spec.baselines[static_cast<std::size_t>(link.feature.video - 1)]
                                      [static_cast<std::size_t>(static_cast<int>(link.feature.emotion))];
    double jitter_var = 0.0;
    if (spec.jitter_concentration > 0.0 && frames_per_video > 0) {
      jitter_var = base * (1.0 - base) / (spec.jitter_concentration + 1.0) /
                   static_cast<double>(frames_per_video);
    }
    const double denom =
        std::sqrt(link.beta * link.beta + link.sigma * link.sigma + jitter_var);
    truth.links.push_back({link, denom > 0.0 ? link.beta / denom : 0.0});
  }

  // which (video, emotion) cells carry links: excluded from idiosyncratic noise
  std::array<std::array<bool, kEmotionCount>, kVideoCount> is_link_cell{};
  for (const auto& link : spec.links) {
    is_link_cell[static_cast<std::size_t>(link.feature.video - 1)]
                [static_cast<std::size_t>(static_cast<int>(link.feature.emotion))] = true;
  }

  std::map<std::pair<std::string, int>, EmotionStream> streams;
  TraitTable traits;
  truth.participants.reserve(static_cast<std::size_t>(spec.n_participants));
  truth.target_features.assign(static_cast<std::size_t>(spec.n_participants) * kFeatureCount, kNaN);

  std::vector<double> alpha(kEmotionCount);
  for (int p = 0; p < spec.n_participants; ++p) {
    Rng rng(derive_seed(spec.seed, {1000, static_cast<std::uint64_t>(p)}));
    const std::string pid = participant_id(p);
    truth.participants.push_back(pid);

    // latent traits always exist; missing families only hide the scores
    std::array<double, kTraitCount> latent{};
    for (int t = 0; t < kTraitCount; ++t) {
      const auto& m = spec.marginals[static_cast<std::size_t>(t)];
      double v = sample_truncated_normal(rng, matched[static_cast<std::size_t>(t)].first,
                                         matched[static_cast<std::size_t>(t)].second, m.min, m.max);
      if (spec.discretize_levels > 1) {
        const double step = (m.max - m.min) / static_cast<double>(spec.discretize_levels - 1);
        v = m.min + step * std::round((v - m.min) / step);
      }
      latent[static_cast<std::size_t>(t)] = v;
    }
    std::array<bool, kFamilyCount> family_present{};
    for (int f = 0; f < kFamilyCount; ++f) {
      family_present[static_cast<std::size_t>(f)] = rng.uniform() >= spec.family_missing_rate[static_cast<std::size_t>(f)];
    }
    std::array<std::optional<double>, kTraitCount> row{};
    bool any_family = false;
    for (int t = 0; t < kTraitCount; ++t) {
      const auto family = trait_family(static_cast<TraitKind>(t));
      if (family_present[static_cast<std::size_t>(static_cast<int>(family))]) {
        row[static_cast<std::size_t>(t)] = latent[static_cast<std::size_t>(t)];
        any_family = true;
      }
    }
    if (any_family) traits.rows.emplace(pid, row);

    for (int v = 1; v <= kVideoCount; ++v) {
      if (rng.uniform() < spec.video_missing_rate) continue;

      // target mixture: baseline + idiosyncratic noise + planted effects.
      // Link cells keep their shifted values exactly; the remaining emotions
      // are rescaled to restore the simplex, so planted slopes stay linear.
      std::array<double, kEmotionCount> mix = spec.baselines[static_cast<std::size_t>(v - 1)];
      if (spec.participant_noise_sd > 0.0) {
        for (int e = 0; e < kEmotionCount; ++e) {
          if (is_link_cell[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(e)]) continue;
          mix[static_cast<std::size_t>(e)] += spec.participant_noise_sd * rng.normal();
        }
      }
      for (const auto& link : spec.links) {
        if (link.feature.video != v) continue;
        const auto& m = spec.marginals[static_cast<std::size_t>(static_cast<int>(link.trait))];
        const double z = (latent[static_cast<std::size_t>(static_cast<int>(link.trait))] - m.mean) / m.sd;
        mix[static_cast<std::size_t>(static_cast<int>(link.feature.emotion))] +=
            link.beta * z + link.sigma * rng.normal();
      }
      double linked_sum = 0.0;
      double rest_sum = 0.0;
      for (int e = 0; e < kEmotionCount; ++e) {
        double& x = mix[static_cast<std::size_t>(e)];
        x = std::clamp(x, kMixFloor, kMixCeil);
        if (is_link_cell[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(e)]) {
          linked_sum += x;
        } else {
          rest_sum += x;
        }
      }
      const double residual = 1.0 - linked_sum;  // >= 0.05 by spec validation
      const double scale = residual / rest_sum;
      for (int e = 0; e < kEmotionCount; ++e) {
        if (!is_link_cell[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(e)]) {
          mix[static_cast<std::size_t>(e)] *= scale;
        }
      }

      for (int e = 0; e < kEmotionCount; ++e) {
        truth.target_features[static_cast<std::size_t>(p) * kFeatureCount +
                              static_cast<std::size_t>(feature_index(static_cast<EmotionKind>(e), v))] =
            mix[static_cast<std::size_t>(e)];
      }

      EmotionStream stream;
      stream.participant_id = pid;
      stream.video_id = v;
      stream.frames.reserve(frames_per_video);
      for (std::size_t i = 0; i < frames_per_video; ++i) {
        EmotionFrame frame;
        frame.timestamp_ms =
            static_cast<std::int64_t>(std::floor(static_cast<double>(i) * 1000.0 / spec.frame_rate_hz));
        if (spec.jitter_concentration > 0.0) {
          for (int e = 0; e < kEmotionCount; ++e) alpha[static_cast<std::size_t>(e)] = spec.jitter_concentration * mix[static_cast<std::size_t>(e)];
          const auto draw = rng.dirichlet(alpha);
          for (int e = 0; e < kEmotionCount; ++e) frame.scores[static_cast<std::size_t>(e)] = draw[static_cast<std::size_t>(e)];
        } else {
          frame.scores = mix;
        }
        stream.frames.push_back(frame);
      }
      streams.emplace(std::make_pair(pid, v), std::move(stream));
    }
  }

  SynthCohort out;
  out.cohort = assemble_cohort(std::move(streams), std::move(traits));
  out.truth = std::move(truth);
  out.truth.cohort_id = out.cohort.cohort_id;
  return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

PlantSpec planted_preset(int n_participants, std::uint64_t seed, double target_rho, double beta) {
  if (!(target_rho > 0.0 && target_rho < 1.0)) throw ValidationError("target_rho must be in (0,1)");
  PlantSpec spec;
  spec.n_participants = n_participants;
  spec.seed = seed;
  spec.video_duration_s = 2.0;
  spec.jitter_concentration = 300.0;
  spec.participant_noise_sd = 0.02;

  // one link per trait, cycling emotions and videos; beta shrinks when the
  // requested rho needs so much noise that the five-sigma envelope would
  // leave the 0.25 baseline headroom
  const double noise_ratio = std::sqrt(1.0 / (target_rho * target_rho) - 1.0);
  const double beta_fit = 0.20 / (5.0 + 4.0 * noise_ratio);
  const double beta_used = std::min(beta, beta_fit);
  for (int t = 0; t < kTraitCount; ++t) {
    PlantedLink link;
    link.trait = static_cast<TraitKind>(t);
    link.feature = {static_cast<EmotionKind>(t % kEmotionCount), (t % kVideoCount) + 1};
    link.beta = beta_used;
    link.sigma = beta_used * noise_ratio;
    spec.links.push_back(link);
  }

  // give planted cells headroom; neutral absorbs the remainder
  for (int v = 0; v < kVideoCount; ++v) {
    std::array<bool, kEmotionCount> planted{};
    for (const auto& link : spec.links) {
      if (link.feature.video == v + 1) planted[static_cast<std::size_t>(static_cast<int>(link.feature.emotion))] = true;
    }
    auto& b = spec.baselines[static_cast<std::size_t>(v)];
    double sum = 0.0;
    for (int e = 0; e < kEmotionCount; ++e) {
      if (e == static_cast<int>(EmotionKind::kNeutral)) continue;
      b[static_cast<std::size_t>(e)] = planted[static_cast<std::size_t>(e)] ? 0.25 : 0.08;
      sum += b[static_cast<std::size_t>(e)];
    }
    if (planted[static_cast<std::size_t>(static_cast<int>(EmotionKind::kNeutral))]) {
      // neutral carries a link here: fix it at 0.25 and scale the others
      b[static_cast<std::size_t>(static_cast<int>(EmotionKind::kNeutral))] = 0.25;
      const double scale = 0.75 / sum;
      for (int e = 0; e < kEmotionCount; ++e) {
        if (e != static_cast<int>(EmotionKind::kNeutral)) b[static_cast<std::size_t>(e)] *= scale;
      }
    } else {
      b[static_cast<std::size_t>(static_cast<int>(EmotionKind::kNeutral))] = 1.0 - sum;
    }
  }
  return spec;
}

PlantSpec null_preset(int n_participants, std::uint64_t seed) {
  PlantSpec spec;
  spec.n_participants = n_participants;
  spec.seed = seed;
  spec.video_duration_s = 1.0;
  spec.jitter_concentration = 200.0;
  spec.participant_noise_sd = 0.03;
  spec.discretize_levels = 10;
  // flat, survey-like marginals: wide parent normal over each trait's range
  for (int t = 0; t < kTraitCount; ++t) {
    auto& m = spec.marginals[static_cast<std::size_t>(t)];
    const double range = m.max - m.min;
    m.mean = m.min + 0.5 * range;
    m.sd = 0.27 * range;
  }
  return spec;
}

PlantSpec paper_scale_preset(std::uint64_t seed) {
  PlantSpec spec = planted_preset(85, seed);
  spec.video_duration_s = 562.0 / 15.0;
  spec.jitter_concentration = 100.0;
  spec.family_missing_rate = {0.06, 0.24, 0.18, 0.19};  // yields the published family Ns
  spec.video_missing_rate = 0.02;
  return spec;
}

// ---------------------------------------------------------------------------
// Ground truth serialization
// ---------------------------------------------------------------------------

std::string GroundTruth::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "ground_truth";
  j["cohort_id"] = cohort_id;
  json links_json = json::array();
  for (const auto& lt : links) {
    json e;
    e["trait"] = std::string(trait_code(lt.link.trait));
    e["feature"] = feature_name(feature_index(lt.link.feature));
    e["beta"] = lt.link.beta;
    e["sigma"] = lt.link.sigma;
    e["implied_rho"] = lt.implied_rho;
    links_json.push_back(std::move(e));
  }
  j["links"] = std::move(links_json);
  json baselines_json = json::array();
  for (const auto& b : baselines) baselines_json.push_back(b);
  j["baselines"] = std::move(baselines_json);
  j["participants"] = participants;
  json targets = json::array();
  for (std::size_t p = 0; p < participants.size(); ++p) {
    json row = json::array();
    for (int c = 0; c < kFeatureCount; ++c) {
      const double v = target_features[p * kFeatureCount + static_cast<std::size_t>(c)];
      if (std::isnan(v)) {
        row.push_back(nullptr);
      } else {
        row.push_back(v);
      }
    }
    targets.push_back(std::move(row));
  }
  j["target_features"] = std::move(targets);
  return j.dump();
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 0) != 1) throw ParseError("unsupported ground truth schema");
  GroundTruth truth;
  truth.cohort_id = j.at("cohort_id").get<std::string>();
  for (const auto& e : j.at("links")) {
    LinkTruth lt;
    const auto trait = trait_from_code(e.at("trait").get<std::string>());
    const auto feature = feature_index_from_name(e.at("feature").get<std::string>());
    if (!trait || !feature) throw ParseError("unknown trait/feature in ground truth");
    lt.link.trait = *trait;
    lt.link.feature = feature_key(*feature);
    lt.link.beta = e.at("beta").get<double>();
    lt.link.sigma = e.at("sigma").get<double>();
    lt.implied_rho = e.at("implied_rho").get<double>();
    truth.links.push_back(lt);
  }
  const auto& bj = j.at("baselines");
  for (int v = 0; v < kVideoCount; ++v) {
    for (int e = 0; e < kEmotionCount; ++e) truth.baselines[static_cast<std::size_t>(v)][static_cast<std::size_t>(e)] = bj[static_cast<std::size_t>(v)][static_cast<std::size_t>(e)].get<double>();
  }
  truth.participants = j.at("participants").get<std::vector<std::string>>();
  for (const auto& row : j.at("target_features")) {
    for (const auto& cell : row) {
      truth.target_features.push_back(cell.is_null() ? kNaN : cell.get<double>());
    }
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Recovery
// ---------------------------------------------------------------------------

std::string RecoveryScore::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "recovery_score";
  if (selection_recall) {
    j["selection_recall"] = *selection_recall;
  } else {
    j["selection_recall"] = nullptr;
  }
  if (shap_top_recall) {
    j["shap_top_recall"] = *shap_top_recall;
  } else {
    j["shap_top_recall"] = nullptr;
  }
  j["correlation_error"] = correlation_error;
  j["mean_holdout_accuracy"] = mean_holdout_accuracy;
  j["mean_holdout_kappa"] = mean_holdout_kappa;
  j["pass"] = pass;
  return j.dump(2);
}

RecoveryScore verify_recovery(const std::vector<EvalReport>& reports,
                              const std::vector<RegressionModel>& models,
                              const CorrelationTable& correlations, const GroundTruth& truth,
                              const RecoveryThresholds& thresholds) {
  for (const auto& report : reports) {
    if (report.cohort_id != truth.cohort_id) {
      throw ValidationError("eval report cohort id '" + report.cohort_id +
                            "' does not match ground truth '" + truth.cohort_id + "'");
    }
  }
  if (correlations.cohort_id != truth.cohort_id) {
    throw ValidationError("correlation table cohort id mismatch");
  }

  RecoveryScore score;
  if (!truth.links.empty()) {
    std::size_t selected = 0, shap_hits = 0;
    double corr_error = 0.0;
    for (const auto& lt : truth.links) {
      const std::string fname = feature_name(feature_index(lt.link.feature));
      const std::string tcode(trait_code(lt.link.trait));
      for (const auto& model : models) {
        if (model.dependent != tcode) continue;
        for (const auto& term : model.terms) {
          if (term.name == fname) {
            ++selected;
            break;
          }
        }
        break;
      }
      for (const auto& report : reports) {
        if (report.trait != lt.link.trait) continue;
        if (std::find(report.importance_top.begin(), report.importance_top.end(), fname) !=
            report.importance_top.end()) {
          ++shap_hits;
        }
        break;
      }
      const auto& cell = correlations.cell(feature_index(lt.link.feature), lt.link.trait);
      const double r = cell ? cell->r : 0.0;
      corr_error += std::abs(r - lt.implied_rho);
    }
    score.selection_recall = static_cast<double>(selected) / static_cast<double>(truth.links.size());
    score.shap_top_recall = static_cast<double>(shap_hits) / static_cast<double>(truth.links.size());
    score.correlation_error = corr_error / static_cast<double>(truth.links.size());
  } else {
    // no planted links: recalls undefined; error = mean |r| against zero
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cell : correlations.cells) {
      if (!cell) continue;
      sum += std::abs(cell->r);
      ++count;
    }
    score.correlation_error = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  if (!reports.empty()) {
    for (const auto& report : reports) {
      score.mean_holdout_accuracy += report.holdout.accuracy;
      score.mean_holdout_kappa += report.holdout.kappa;
    }
    score.mean_holdout_accuracy /= static_cast<double>(reports.size());
    score.mean_holdout_kappa /= static_cast<double>(reports.size());
  }

  score.pass = score.correlation_error <= thresholds.max_correlation_error;
  if (score.selection_recall) score.pass = score.pass && *score.selection_recall >= thresholds.min_selection_recall;
  if (score.shap_top_recall) score.pass = score.pass && *score.shap_top_recall >= thresholds.min_shap_recall;
  return score;
}

}  // namespace emotrait
