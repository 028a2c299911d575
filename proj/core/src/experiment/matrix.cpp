#include "mdr/experiment/matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"

namespace mdr {
namespace {

std::string fmt_stat(const SummaryStat& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f +- %.4f", s.mean, s.stddev);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

MatrixRow row_from_manifest(const std::string& name, const RunManifest& m) {
  MatrixRow row;
  row.name = name;
  row.config_hash = m.config_hash;
  row.runs_ok = m.runs.size();
  row.runs_failed = m.failures.size();
  auto pick = [&](const std::string& key) {
    auto it = m.summary.find(key);
    return it == m.summary.end() ? SummaryStat{} : it->second;
  };
  row.test_recall1 = pick("test_recall@1");
  row.train_recall1 = pick("train_recall@1");
  row.norm_cv = pick("test_norm_cv");
  row.gap = pick("gap");
  for (const auto& [seed, error] : m.failures) {
    row.errors.push_back("seed " + std::to_string(seed) + ": " + error);
  }
  return row;
}

}  // namespace

std::string MatrixReport::to_csv() const {
  std::ostringstream out;
  out << "config,config_hash,runs_ok,runs_failed,test_recall1_mean,test_recall1_std,"
         "train_recall1_mean,train_recall1_std,norm_cv_mean,norm_cv_std,gap_mean,gap_std,"
         "errors\n";
  out.precision(17);
  for (const MatrixRow& r : rows) {
    std::string errors;
    for (const auto& e : r.errors) errors += (errors.empty() ? "" : "; ") + e;
    out << csv_escape(r.name) << ',' << r.config_hash << ',' << r.runs_ok << ','
        << r.runs_failed << ',' << r.test_recall1.mean << ',' << r.test_recall1.stddev << ','
        << r.train_recall1.mean << ',' << r.train_recall1.stddev << ',' << r.norm_cv.mean
        << ',' << r.norm_cv.stddev << ',' << r.gap.mean << ',' << r.gap.stddev << ','
        << csv_escape(errors) << '\n';
  }
  return out.str();
}

std::string MatrixReport::to_text() const {
  std::size_t width = 6;
  for (const MatrixRow& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-*s  %5s  %-18s  %-18s  %-18s  %-18s\n",
                static_cast<int>(width), "config", "runs", "test R@1", "train R@1",
                "norm CV", "gap (train-test)");
  out << line;
  for (const MatrixRow& r : rows) {
    const std::string runs = std::to_string(r.runs_ok) + "/" +
                             std::to_string(r.runs_ok + r.runs_failed);
    std::snprintf(line, sizeof(line), "%-*s  %5s  %-18s  %-18s  %-18s  %-18s\n",
                  static_cast<int>(width), r.name.c_str(), runs.c_str(),
                  fmt_stat(r.test_recall1).c_str(), fmt_stat(r.train_recall1).c_str(),
                  fmt_stat(r.norm_cv).c_str(), fmt_stat(r.gap).c_str());
    out << line;
    for (const auto& e : r.errors) out << "    ! " << e << '\n';
  }
  return out.str();
}

void MatrixReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.csv") << to_csv();
  std::ofstream(dir / "report.txt") << to_text();
}

MatrixReport run_matrix(const std::vector<std::pair<std::string, ExperimentConfig>>& configs,
                        const std::filesystem::path& output_root) {
  if (configs.empty()) throw ConfigError("run_matrix: no configs given");
  MatrixReport report;
  for (const auto& [name, config] : configs) {
    ExperimentConfig named = config;
    named.run.name = name;
    try {
      report.rows.push_back(row_from_manifest(name, train(named, output_root)));
    } catch (const std::exception& e) {
      spdlog::error("matrix: config {} failed: {}", name, e.what());
      MatrixRow row;
      row.name = name;
      row.runs_failed = config.run.seeds.size();
      row.errors.push_back(e.what());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

MatrixReport run_matrix_dir(const std::filesystem::path& config_dir,
                            const std::filesystem::path& output_root) {
  if (!std::filesystem::is_directory(config_dir)) {
    throw ConfigError("matrix: " + config_dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(config_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ini") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("matrix: no .ini configs in " + config_dir.string());

  const std::string dir_name = std::filesystem::absolute(config_dir).lexically_normal().filename().string();
  const std::filesystem::path out_dir = output_root / (dir_name.empty() ? "matrix" : dir_name);

  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  std::vector<MatrixRow> broken;
  for (const auto& file : files) {
    try {
      configs.emplace_back(file.stem().string(), ExperimentConfig::load(file));
    } catch (const std::exception& e) {
      MatrixRow row;
      row.name = file.stem().string();
      row.errors.push_back(e.what());
      broken.push_back(std::move(row));
    }
  }
  MatrixReport report;
  if (!configs.empty()) report = run_matrix(configs, out_dir);
  report.rows.insert(report.rows.end(), broken.begin(), broken.end());
  std::sort(report.rows.begin(), report.rows.end(),
            [](const MatrixRow& a, const MatrixRow& b) { return a.name < b.name; });

  report.write(out_dir);
  return report;
}

}  // namespace mdr
