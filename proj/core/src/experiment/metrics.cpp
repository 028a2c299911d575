#include "mdr/experiment/metrics.hpp"

#include <string>

#include "mdr/error.hpp"

namespace mdr {
namespace {

using nlohmann::json;

json recall_to_json(const RecallMap& recall) {
  json j = json::object();
  for (const auto& [k, v] : recall) j[std::to_string(k)] = v;
  return j;
}

RecallMap recall_from_json(const json& j) {
  RecallMap out;
  for (const auto& [k, v] : j.items()) out[std::stoul(k)] = v.get<double>();
  return out;
}

json loss_to_json(const LossComponents& l) {
  return json{{"dml", l.dml}, {"mdr", l.mdr}, {"total", l.total}};
}

LossComponents loss_from_json(const json& j) {
  return {j.at("dml").get<double>(), j.at("mdr").get<double>(), j.at("total").get<double>()};
}

}  // namespace

json to_json(const SplitMetrics& m) {
  json levels = json::array();
  for (const LevelCount& c : m.level_counts) {
    levels.push_back(json{{"positive", c.positive}, {"negative", c.negative}});
  }
  json j{{"recall", recall_to_json(m.recall)},
         {"norm", {{"mean", m.norms.mean}, {"std", m.norms.stddev}, {"cv", m.norms.cv}}},
         {"level_counts", levels},
         {"loss", loss_to_json(m.loss)}};
  if (m.recall_normalized) j["recall_normalized"] = recall_to_json(*m.recall_normalized);
  return j;
}

json to_json(const MetricsRecord& r) {
  return json{{"schema", kMetricsSchema},
              {"step", r.step},
              {"levels", r.levels},
              {"mu_star", r.mu_star},
              {"sigma_star", r.sigma_star},
              {"train", to_json(r.train)},
              {"test", to_json(r.test)},
              {"gap", r.train.recall.contains(1) && r.test.recall.contains(1)
                          ? json(r.train.recall.at(1) - r.test.recall.at(1))
                          : json(nullptr)},
              {"batch_loss", loss_to_json(r.batch_loss)}};
}

SplitMetrics split_metrics_from_json(const json& j) {
  SplitMetrics m;
  m.recall = recall_from_json(j.at("recall"));
  if (j.contains("recall_normalized")) m.recall_normalized = recall_from_json(j.at("recall_normalized"));
  const json& norm = j.at("norm");
  m.norms = {norm.at("mean").get<double>(), norm.at("std").get<double>(),
             norm.at("cv").get<double>()};
  for (const json& c : j.at("level_counts")) {
    m.level_counts.push_back({c.at("positive").get<std::size_t>(),
                              c.at("negative").get<std::size_t>()});
  }
  m.loss = loss_from_json(j.at("loss"));
  return m;
}

MetricsRecord metrics_record_from_json(const json& j) {
  if (j.value("schema", "") != kMetricsSchema) {
    throw ParseError("metrics record has schema '" + j.value("schema", "") + "', expected '" +
                     std::string(kMetricsSchema) + "'");
  }
  MetricsRecord r;
  r.step = j.at("step").get<std::int64_t>();
  r.levels = j.at("levels").get<std::vector<double>>();
  r.mu_star = j.at("mu_star").get<double>();
  r.sigma_star = j.at("sigma_star").get<double>();
  r.train = split_metrics_from_json(j.at("train"));
  r.test = split_metrics_from_json(j.at("test"));
  r.batch_loss = loss_from_json(j.at("batch_loss"));
  return r;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path)
    : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write metrics file " + path.string());
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << to_json(record).dump() << '\n';
  out_.flush();
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metrics file " + path.string());
  std::vector<MetricsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(metrics_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace mdr
