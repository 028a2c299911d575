#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mdr/mdr.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

enum class LossKind { kTriplet, kContrastive, kMargin };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

inline const std::string kMarginBetaParam = "loss.margin_beta";

struct LossConfig {
  LossKind kind = LossKind::kTriplet;
  double margin = 0.2;
  double lambda = 0.0;
  /// Divide embeddings by mu* inside the DML term.
  bool trick = false;
  /// Unit-normalize embeddings before the DML term (conventional baseline).
  bool l2_normalize = false;
  /// Initial boundary for the margin loss.
  double margin_beta = 1.2;

  void validate() const;
};

/// mean over triplets of max(d(a, p) - d(a, n) + m, 0). An empty set yields a
/// constant 0 and a warning.
Var triplet_loss(Var embeddings, const TripletSet& triplets, double margin);

/// mean over pairs of d^2 (positive) or max(m - d, 0)^2 (negative).
Var contrastive_loss(Var embeddings, const PairSet& pairs, double margin);

/// Positives: max(m + d - beta, 0); negatives: max(m + beta - d, 0). Averaged
/// over pairs with a nonzero term (the count is a constant within a step).
/// beta is a one-element trainable tensor.
Var margin_loss(Var embeddings, const PairSet& pairs, double margin, Var beta);

/// embeddings / mu*, with mu* held constant. Throws NumericalError when mu*
/// has collapsed.
Var apply_trick(Var embeddings, const DistanceStats& stats);

/// L_dml + lambda * L_mdr
Var combined_loss(Var dml, Var mdr, double lambda);

}  // namespace mdr
