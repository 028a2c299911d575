#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mdr/embedder.hpp"
#include "mdr/experiment/trainer.hpp"
#include "mdr/mdr.hpp"
#include "mdr/numerics/finite_diff.hpp"
#include "mdr/sampling.hpp"

namespace mdr::check {

std::string describe(const GradCheckCase& c) {
  std::string s(to_string(c.kind));
  s += c.mdr ? "+mdr" : "";
  s += c.trick ? "+trick" : "";
  s += c.l2 ? "+l2" : "";
  return s;
}

namespace {

double norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

GradCheckResult gradient_check(const GradCheckCase& c, std::uint64_t seed) {
  constexpr std::size_t kBatch = 8;
  constexpr std::size_t kInput = 5;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Tensor features({kBatch, kInput});
  for (double& v : features.data()) v = normal(rng);
  const std::vector<Label> labels = {0, 0, 1, 1, 2, 2, 3, 3};

  const MlpEmbedder embedder(EmbedderConfig{.input_dim = kInput, .hidden = {6}, .embedding_dim = 4});
  ParamStore params;
  embedder.init(params, seed ^ 0x5eedULL);
  if (c.mdr) {
    std::uniform_real_distribution<double> level(-1.5, 1.5);
    add_levels(params, {level(rng), level(rng), level(rng)});
  }
  if (c.kind == LossKind::kMargin) {
    std::uniform_real_distribution<double> beta(0.5, 1.5);
    params.add(kMarginBetaParam, Tensor::vector({beta(rng)}), false);
  }

  ObjectiveSpec spec;
  spec.loss.kind = c.kind;
  spec.loss.margin = c.kind == LossKind::kContrastive ? 1.0 : 0.2;
  spec.loss.lambda = c.mdr ? 0.5 : 0.0;
  spec.loss.trick = c.trick;
  spec.loss.l2_normalize = c.l2;
  spec.mdr_enabled = c.mdr;

  // Stats from the initial point, then frozen.
  DistanceStats stats(0.9);
  {
    Tape tape;
    Var e = embedder.embed(params.bind(tape), tape.constant(features));
    stats.update(pairwise_distances(e, all_pairs(labels)).value().data());
  }
  SamplerState sampler(seed + 1);
  const TripletSet triplets = uniform_triplets(labels, sampler);
  const TripletMiner fixed = [&](const Tensor&, std::span<const Label>) { return triplets; };

  auto objective = [&](const ParamStore& p, Tape& tape) {
    DistanceStats frozen = stats;
    return build_objective(embedder, p.bind(tape), tape.constant(features), labels, spec,
                           frozen, false, fixed);
  };

  Tape tape;
  const BoundParams bound = params.bind(tape);
  DistanceStats frozen = stats;
  Objective o = build_objective(embedder, bound, tape.constant(features), labels, spec, frozen,
                                false, fixed);
  tape.backward(o.total);
  const GradientMap analytic = bound.gradients();

  GradCheckResult result;
  result.accepted = tape.min_kink_distance() >= 1e-4;
  const GradientMap numeric = finite_diff_gradient(
      [&](const ParamStore& p) {
        Tape t;
        return objective(p, t).total.value().item();
      },
      params, 1e-5);

  // A tensor whose true gradient is zero (the output bias: every loss only sees
  // distances) gets pure FD roundoff on the numeric side, so its denominator is
  // floored at a millionth of the whole gradient's norm.
  double total_sq = 0.0;
  for (const auto& [name, a] : analytic) total_sq += norm(a) * norm(a);
  const double floor = std::max(1e-6 * std::sqrt(total_sq), 1e-10);
  for (const auto& [name, a] : analytic) {
    const Tensor& n = numeric.at(name);
    Tensor diff = a;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= n[i];
    const double rel = norm(diff) / std::max({norm(a), norm(n), floor});
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = name;
    }
  }
  return result;
}

}  // namespace mdr::check
