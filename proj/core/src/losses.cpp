#include "mdr/losses.hpp"

#include <vector>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"
#include "mdr/numerics/ops.hpp"

namespace mdr {
namespace {

constexpr double kMinTrickScale = 1e-9;

struct IndexLists {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

void split_by_polarity(const PairSet& pairs, IndexLists& positives, IndexLists& negatives) {
  for (const Pair& p : pairs) {
    IndexLists& dst = p.positive ? positives : negatives;
    dst.first.push_back(p.i);
    dst.second.push_back(p.j);
  }
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kTriplet:
      return "triplet";
    case LossKind::kContrastive:
      return "contrastive";
    case LossKind::kMargin:
      return "margin";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "triplet") return LossKind::kTriplet;
  if (text == "contrastive") return LossKind::kContrastive;
  if (text == "margin") return LossKind::kMargin;
  throw ConfigError("unknown loss kind '" + std::string(text) +
                    "' (expected triplet, contrastive or margin)");
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("loss.lambda must be >= 0");
  if (!(margin > 0.0)) throw ConfigError("loss.margin must be > 0");
  if (trick && l2_normalize) {
    throw ConfigError("loss.trick and loss.l2_normalize are mutually exclusive");
  }
  if (kind == LossKind::kMargin && !(margin_beta > 0.0)) {
    throw ConfigError("loss.margin_beta must be > 0");
  }
}

Var triplet_loss(Var embeddings, const TripletSet& triplets, double margin) {
  if (triplets.empty()) {
    spdlog::warn("triplet_loss: empty triplet set, no gradient signal this step");
    return embeddings.tape().constant(Tensor::scalar(0.0));
  }
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (const Triplet& t : triplets) {
    anchors.push_back(t.anchor);
    positives.push_back(t.positive);
    negatives.push_back(t.negative);
  }
  const Var d_ap = pair_distances(embeddings, anchors, positives);
  const Var d_an = pair_distances(embeddings, anchors, negatives);
  return ops::mean(ops::hinge(ops::shift(ops::sub(d_ap, d_an), margin)));
}

Var contrastive_loss(Var embeddings, const PairSet& pairs, double margin) {
  if (pairs.empty()) {
    spdlog::warn("contrastive_loss: empty pair set, no gradient signal this step");
    return embeddings.tape().constant(Tensor::scalar(0.0));
  }
  IndexLists pos;
  IndexLists neg;
  split_by_polarity(pairs, pos, neg);
  const double inv_count = 1.0 / static_cast<double>(pairs.size());
  Tape& tape = embeddings.tape();
  Var total = tape.constant(Tensor::scalar(0.0));
  if (!pos.first.empty()) {
    const Var d = pair_distances(embeddings, pos.first, pos.second);
    total = ops::add(total, ops::sum(ops::square(d)));
  }
  if (!neg.first.empty()) {
    const Var d = pair_distances(embeddings, neg.first, neg.second);
    const Var gap = ops::hinge(ops::shift(ops::scale(d, -1.0), margin));
    total = ops::add(total, ops::sum(ops::square(gap)));
  }
  return ops::scale(total, inv_count);
}

Var margin_loss(Var embeddings, const PairSet& pairs, double margin, Var beta) {
  if (beta.value().rank() != 1 || beta.value().size() != 1) {
    throw ConfigError("margin_loss: beta must have one element, got shape " +
                      shape_string(beta.shape()));
  }
  Tape& tape = embeddings.tape();
  if (pairs.empty()) {
    spdlog::warn("margin_loss: empty pair set, no gradient signal this step");
    return tape.constant(Tensor::scalar(0.0));
  }
  IndexLists pos;
  IndexLists neg;
  split_by_polarity(pairs, pos, neg);
  Var total = tape.constant(Tensor::scalar(0.0));
  std::size_t active = 0;
  auto accumulate = [&](const IndexLists& lists, double sign) {
    if (lists.first.empty()) return;
    const Var d = pair_distances(embeddings, lists.first, lists.second);
    const std::vector<std::size_t> zeros(lists.first.size(), 0);
    const Var b = ops::gather(beta, zeros);
    // sign = +1: m + d - beta ; sign = -1: m + beta - d
    const Var terms = ops::hinge(ops::shift(ops::scale(ops::sub(d, b), sign), margin));
    for (double v : terms.value().data()) active += v > 0.0 ? 1 : 0;
    total = ops::add(total, ops::sum(terms));
  };
  accumulate(pos, 1.0);
  accumulate(neg, -1.0);
  if (active == 0) return total;
  return ops::scale(total, 1.0 / static_cast<double>(active));
}

Var apply_trick(Var embeddings, const DistanceStats& stats) {
  if (!stats.initialized()) throw UsageError("apply_trick: stats not initialized");
  if (stats.mean() < kMinTrickScale) {
    throw NumericalError("apply_trick: mean distance " + std::to_string(stats.mean()) +
                         " has collapsed, cannot rescale embeddings");
  }
  return ops::scale(embeddings, 1.0 / stats.mean());
}

Var combined_loss(Var dml, Var mdr, double lambda) {
  return ops::add(dml, ops::scale(mdr, lambda));
}

}  // namespace mdr
