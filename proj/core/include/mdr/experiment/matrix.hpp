#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mdr/experiment/config.hpp"
#include "mdr/experiment/trainer.hpp"

namespace mdr {

/// One comparison row: a config trained over all its seeds.
struct MatrixRow {
  std::string name;
  std::string config_hash;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  SummaryStat test_recall1;
  SummaryStat train_recall1;
  SummaryStat norm_cv;
  SummaryStat gap;
  std::vector<std::string> errors;

  /// True when every statistic comes from at least one successful run.
  bool complete() const { return runs_ok > 0; }
};

struct MatrixReport {
  std::vector<MatrixRow> rows;

  /// Comma-separated table with a header line.
  std::string to_csv() const;
  /// Aligned human-readable table.
  std::string to_text() const;
  // Writes report.csv and report.txt into dir.
  void write(const std::filesystem::path& dir) const;
};

/// Trains each named config over its seeds. Failures are recorded in the
/// row and the matrix moves on.
MatrixReport run_matrix(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                        const std::filesystem::path& output_root);

/// Every *.ini in config_dir, in file-name order. Rows are named by file
/// stem; unparsable files become failed rows. Writes report.csv and
/// report.txt under output_root/<dir name>/.
MatrixReport run_matrix_dir(const std::filesystem::path& config_dir,
                            const std::filesystem::path& output_root);

}  // namespace mdr
