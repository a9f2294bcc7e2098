#pragma once

// Declarative experiments: a JSON config names a dataset, feature sets,
// classifiers, aggregations and the protocol; lists under feature_set, classifier
// and aggregation expand into a grid.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "touchauth/aggregation.hpp"
#include "touchauth/catalog.hpp"
#include "touchauth/classifier.hpp"
#include "touchauth/error.hpp"
#include "touchauth/features.hpp"
#include "touchauth/ingest.hpp"
#include "touchauth/protocol.hpp"
#include "touchauth/selection.hpp"
#include "touchauth/synthetic.hpp"

namespace touchauth {

namespace fs = std::filesystem;

/// A dataset reference: canonical file on disk or a synthetic spec.
struct DatasetSource {
  std::optional<fs::path> path;
  std::optional<SyntheticSpec> synthetic;
  EligibilityCriteria eligibility{};

  static DatasetSource from_json(const nlohmann::json& j, const fs::path& base_dir) {
    DatasetSource d;
    try {
      if (j.is_string()) {
        d.path = base_dir / j.get<std::string>();
        return d;
      }
      if (!j.is_object()) throw Error(ErrorKind::Config, "dataset must be a path or an object");
      if (j.contains("synthetic")) d.synthetic = SyntheticSpec::from_json(j.at("synthetic"));
      if (j.contains("path")) d.path = base_dir / j.at("path").get<std::string>();
      if (d.path.has_value() == d.synthetic.has_value())
        throw Error(ErrorKind::Config, "dataset needs exactly one of 'path' or 'synthetic'");
      if (j.contains("eligibility")) {
        const auto& e = j.at("eligibility");
        d.eligibility.min_sessions = e.value("min_sessions", d.eligibility.min_sessions);
        d.eligibility.require_same_device = e.value("require_same_device", d.eligibility.require_same_device);
        if (e.contains("required_channels")) {
          d.eligibility.required_channels.clear();
          for (const auto& c : e.at("required_channels")) {
            const auto name = c.get<std::string>();
            if (name == "x") d.eligibility.required_channels.insert(Channel::X);
            else if (name == "y") d.eligibility.required_channels.insert(Channel::Y);
            else if (name == "pressure") d.eligibility.required_channels.insert(Channel::Pressure);
            else if (name == "area") d.eligibility.required_channels.insert(Channel::Area);
            else throw Error(ErrorKind::Config, "unknown channel '" + name + "'");
          }
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad dataset section: ") + e.what());
    }
    return d;
  }

  std::string label() const {
    return path ? path->filename().string() : "synthetic(seed=" + std::to_string(synthetic->seed) + ")";
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (path) j["path"] = path->filename().string();
    if (synthetic) j["synthetic"] = synthetic->to_json();
    j["eligibility"] = {{"min_sessions", eligibility.min_sessions},
                        {"require_same_device", eligibility.require_same_device}};
    return j;
  }
};

/// Loads, then applies eligibility. Data problems surface as data-kind errors.
inline Dataset load_dataset(const DatasetSource& src, ParseReport* parse = nullptr,
                            EligibilityReport* eligibility = nullptr) {
  Dataset raw;
  if (src.synthetic) {
    raw = generate_synthetic(*src.synthetic);
  } else {
    std::ifstream in(*src.path);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset " + src.path->string());
    raw = parse_canonical(in, parse);
    if (raw.name.empty()) raw.name = src.path->stem().string();
  }
  if (raw.users.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no swipes");
  return filter_eligible(raw, src.eligibility, eligibility);
}

inline bool is_data_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::UnparseableHeader:
    case ErrorKind::MalformedRateExceeded:
    case ErrorKind::EmptyDataset:
    case ErrorKind::NoEligibleUsers:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

/// Rows of all 149 features with user-index labels, as selection input.
inline LabeledFeatures labeled_features(const std::string& name, const FeatureTable& table) {
  LabeledFeatures lf;
  lf.name = name;
  for (std::size_t u = 0; u < table.vectors.size(); ++u)
    for (const auto& session : table.vectors[u])
      for (const auto& fv : session) {
        std::vector<double> v(fv.values.begin(), fv.values.end());
        std::vector<double> m(kFeatureCount);
        for (int i = 0; i < kFeatureCount; ++i) m[static_cast<std::size_t>(i)] = fv.defined[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        lf.X.append_row(v);
        lf.defined.append_row(m);
        lf.labels.push_back(static_cast<int>(u));
      }
  return lf;
}

/// How the "ANOVA" feature set is obtained: a stored selection file or a fresh
/// selection over several datasets.
struct AnovaSource {
  std::optional<fs::path> set_file;
  std::vector<DatasetSource> datasets;
  SelectionConfig selection{};

  static AnovaSource from_json(const nlohmann::json& j, const fs::path& base_dir) {
    AnovaSource a;
    if (j.is_null()) return a;
    try {
      if (j.is_string()) {
        a.set_file = base_dir / j.get<std::string>();
        return a;
      }
      if (j.contains("set_file")) a.set_file = base_dir / j.at("set_file").get<std::string>();
      if (j.contains("datasets"))
        for (const auto& d : j.at("datasets")) a.datasets.push_back(DatasetSource::from_json(d, base_dir));
      a.selection.n_per_dataset = j.value("n", a.selection.n_per_dataset);
      a.selection.min_dataset_votes = j.value("votes", a.selection.min_dataset_votes);
      a.selection.max_undefined_fraction = j.value("max_undefined_fraction", a.selection.max_undefined_fraction);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad anova section: ") + e.what());
    }
    return a;
  }

  bool configured() const { return set_file.has_value() || !datasets.empty(); }
};

/// Reads "selected" from a selection report, or a bare id list.
inline std::vector<int> read_feature_set_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Config, "cannot open feature set file " + p.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    auto ids = j.is_array() ? j.get<std::vector<int>>() : j.at("selected").get<std::vector<int>>();
    for (int id : ids)
      if (id < 1 || id > kFeatureCount) throw Error(ErrorKind::Config, "feature id out of range in " + p.string());
    return ids;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "bad feature set file " + p.string() + ": " + e.what());
  }
}

inline SelectionResult run_selection(const std::vector<DatasetSource>& sources, const SelectionConfig& cfg) {
  std::vector<LabeledFeatures> inputs;
  for (const auto& s : sources) {
    const Dataset ds = load_dataset(s);
    inputs.push_back(labeled_features(s.label(), extract_dataset(ds)));
  }
  return select_features(inputs, cfg);
}

struct FeatureSet {
  std::string label;
  std::vector<int> ids;
};

/// Resolves one feature-set entry: "ALL", "ANOVA", a study id, an id list, or
/// {"name": ..., "ids": [...]}.
inline FeatureSet resolve_feature_set(const nlohmann::json& j, const std::function<std::vector<int>()>& anova) {
  auto check = [](std::vector<int> ids) {
    if (ids.empty()) throw Error(ErrorKind::Config, "empty feature id list");
    for (int id : ids)
      if (id < 1 || id > kFeatureCount) throw Error(ErrorKind::UnknownFeatureId, "feature id " + std::to_string(id));
    return ids;
  };
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "ALL") return {"ALL", all_feature_ids()};
    if (name == "ANOVA") return {"ANOVA", anova()};
    try {
      return {name, study_feature_set(name)};
    } catch (const Error&) {
      throw Error(ErrorKind::Config, "unknown feature set '" + name + "'");
    }
  }
  try {
    if (j.is_array()) return {"custom" + std::to_string(j.size()), check(j.get<std::vector<int>>())};
    if (j.is_object()) return {j.at("name").get<std::string>(), check(j.at("ids").get<std::vector<int>>())};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad feature set: ") + e.what());
  }
  throw Error(ErrorKind::Config, "feature_set entries must be names, id lists or {name, ids}");
}

struct OutputConfig {
  fs::path dir = "out";
  std::string format = "json";  // csv | json
  bool roc = false;
  bool wall_time = false;  // off by default so reports stay byte-identical
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSource dataset;
  std::vector<nlohmann::json> feature_sets;
  AnovaSource anova;
  std::vector<ClassifierSpec> classifiers;
  std::vector<AggregationSpec> aggregations;
  ProtocolConfig protocol;
  OutputConfig output;
  int workers = 1;

  /// A list whose elements are all integers is one explicit id set; any other list
  /// is a grid of entries.
  static std::vector<nlohmann::json> grid_entries(const nlohmann::json& j) {
    if (j.is_array() && !j.empty() && !std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_number_integer(); }))
      return {j.begin(), j.end()};
    return {j};
  }

  static ExperimentConfig from_json(const nlohmann::json& j, const fs::path& base_dir = ".") {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
    ExperimentConfig c;
    try {
      c.name = j.value("name", c.name);
      if (!j.contains("dataset")) throw Error(ErrorKind::Config, "config needs a 'dataset'");
      c.dataset = DatasetSource::from_json(j.at("dataset"), base_dir);
      c.feature_sets = grid_entries(j.value("feature_set", nlohmann::json("ALL")));
      c.anova = AnovaSource::from_json(j.value("anova", nlohmann::json()), base_dir);
      c.protocol = ProtocolConfig::from_json(j.value("protocol", nlohmann::json()));
      for (const auto& e : grid_entries(j.value("classifier", nlohmann::json("ensemble"))))
        c.classifiers.push_back(ClassifierSpec::from_json(e, c.protocol.seed));
      for (const auto& e : grid_entries(j.value("aggregation", nlohmann::json("none"))))
        c.aggregations.push_back(AggregationSpec::from_json(e));
      if (j.contains("output")) {
        const auto& o = j.at("output");
        if (o.contains("dir")) c.output.dir = base_dir / o.at("dir").get<std::string>();
        c.output.format = o.value("format", c.output.format);
        c.output.roc = o.value("roc", c.output.roc);
        c.output.wall_time = o.value("wall_time", c.output.wall_time);
      }
      c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad config: ") + e.what());
    }
    if (c.output.format != "csv" && c.output.format != "json")
      throw Error(ErrorKind::Config, "output.format must be csv or json");
    if (c.workers < 1) throw Error(ErrorKind::Config, "workers must be >= 1");
    return c;
  }

  static ExperimentConfig load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::Config, "cannot open config " + file.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j, file.parent_path());
  }

  /// Re-seeds the protocol and every classifier.
  void set_seed(std::uint64_t seed) {
    protocol.seed = seed;
    for (auto& c : classifiers) {
      c.seed = seed;
      for (auto& m : c.members) m.seed = seed;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json cls = nlohmann::json::array(), aggs = nlohmann::json::array();
    for (const auto& c : classifiers) cls.push_back(c.to_json());
    for (const auto& a : aggregations) aggs.push_back(a.to_json());
    return {{"name", name},         {"dataset", dataset.to_json()},  {"feature_set", feature_sets},
            {"classifier", cls},    {"aggregation", aggs},           {"protocol", protocol.to_json()},
            {"workers", workers}};
  }
};

/// One evaluated (feature set, classifier, aggregation) combination.
struct MatrixCell {
  std::string feature_set;
  std::string classifier;
  std::string aggregation;
  std::optional<EvalReport> report;
  std::string error;  // set when the cell failed

  bool ok() const { return report.has_value() && std::isfinite(report->mean_eer); }
  double eer_percent() const { return ok() ? 100.0 * report->mean_eer : std::nan(""); }
};

struct MatrixReport {
  ExperimentConfig config;
  std::vector<std::string> feature_sets;  // row labels
  std::vector<std::string> classifiers;   // column labels
  std::vector<std::string> aggregations;  // aggregation labels
  std::vector<MatrixCell> cells;          // [feature set][classifier][aggregation], row-major
  std::size_t users = 0;
  std::optional<double> wall_seconds;

  const MatrixCell& cell(std::size_t f, std::size_t c, std::size_t a) const {
    return cells[(f * classifiers.size() + c) * aggregations.size() + a];
  }
  std::size_t failed_cells() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok(); }));
  }

  /// Aggregation column used for the feature-set x classifier table: "none" if
  /// present, otherwise the first aggregation.
  std::size_t primary_aggregation() const {
    for (std::size_t a = 0; a < aggregations.size(); ++a)
      if (aggregations[a] == "none") return a;
    return 0;
  }

  static double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    int n = 0;
    for (double x : v)
      if (std::isfinite(x)) {
        s += x;
        ++n;
      }
    return n ? s / n : std::nan("");
  }

  double row_mean(std::size_t f) const {
    std::vector<double> v;
    for (std::size_t c = 0; c < classifiers.size(); ++c) v.push_back(cell(f, c, primary_aggregation()).eer_percent());
    return mean_of(v);
  }
  double column_mean(std::size_t c) const {
    std::vector<double> v;
    for (std::size_t f = 0; f < feature_sets.size(); ++f) v.push_back(cell(f, c, primary_aggregation()).eer_percent());
    return mean_of(v);
  }
};

/// Runs the full grid. Failed cells are recorded and the matrix is still built.
inline MatrixReport run_matrix(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  MatrixReport rep;
  rep.config = cfg;
  const Dataset ds = load_dataset(cfg.dataset);
  const FeatureTable table = extract_dataset(ds);
  rep.users = ds.users.size();

  std::optional<std::vector<int>> anova_ids;
  auto anova = [&]() -> std::vector<int> {
    if (!anova_ids) {
      if (!cfg.anova.configured())
        throw Error(ErrorKind::Config, "feature set ANOVA needs an 'anova' section (set_file or datasets)");
      anova_ids = cfg.anova.set_file ? read_feature_set_file(*cfg.anova.set_file)
                                     : run_selection(cfg.anova.datasets, cfg.anova.selection).selected;
      if (anova_ids->empty()) throw Error(ErrorKind::Config, "ANOVA selection produced no features");
    }
    return *anova_ids;
  };
  std::vector<FeatureSet> sets;
  for (const auto& j : cfg.feature_sets) sets.push_back(resolve_feature_set(j, anova));

  for (const auto& s : sets) rep.feature_sets.push_back(s.label);
  for (const auto& c : cfg.classifiers) rep.classifiers.push_back(c.name());
  for (const auto& a : cfg.aggregations) rep.aggregations.push_back(a.label());

  for (const auto& s : sets) {
    EvaluationData data{&ds, &table, s.ids};
    for (const auto& c : cfg.classifiers) {
      std::vector<MatrixCell> group(cfg.aggregations.size());
      for (std::size_t a = 0; a < group.size(); ++a) {
        group[a].feature_set = s.label;
        group[a].classifier = c.name();
        group[a].aggregation = cfg.aggregations[a].label();
      }
      try {
        auto reports = run_experiment(data, c, cfg.aggregations, cfg.protocol, {cfg.workers, cfg.output.roc});
        for (std::size_t a = 0; a < group.size(); ++a) {
          reports[a].feature_set = s.label;
          if (!std::isfinite(reports[a].mean_eer)) group[a].error = "no user could be evaluated";
          group[a].report = std::move(reports[a]);
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ProtocolViolation) throw;
        for (auto& g : group) g.error = e.what();
      }
      rep.cells.insert(rep.cells.end(), group.begin(), group.end());
    }
  }
  if (cfg.output.wall_time)
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Report writers

namespace detail {
inline std::string fmt_percent(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string fmt_rate(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
inline nlohmann::json json_num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace detail

/// Feature-set x classifier table (mean EER %) with row and column means.
inline void write_matrix_csv(const MatrixReport& r, std::ostream& out) {
  const std::size_t a = r.primary_aggregation();
  out << "features";
  for (const auto& c : r.classifiers) out << ',' << detail::csv_field(c);
  out << ",mean\n";
  for (std::size_t f = 0; f < r.feature_sets.size(); ++f) {
    out << detail::csv_field(r.feature_sets[f]);
    for (std::size_t c = 0; c < r.classifiers.size(); ++c) out << ',' << detail::fmt_percent(r.cell(f, c, a).eer_percent());
    out << ',' << detail::fmt_percent(r.row_mean(f)) << '\n';
  }
  out << "mean";
  for (std::size_t c = 0; c < r.classifiers.size(); ++c) out << ',' << detail::fmt_percent(r.column_mean(c));
  out << ",\n";
}

/// One row per (feature set, classifier) with mean EER % for each aggregation.
inline void write_aggregation_csv(const MatrixReport& r, std::ostream& out) {
  out << "features,classifier";
  for (const auto& a : r.aggregations) out << ',' << detail::csv_field(a);
  out << '\n';
  for (std::size_t f = 0; f < r.feature_sets.size(); ++f)
    for (std::size_t c = 0; c < r.classifiers.size(); ++c) {
      out << detail::csv_field(r.feature_sets[f]) << ',' << detail::csv_field(r.classifiers[c]);
      for (std::size_t a = 0; a < r.aggregations.size(); ++a) out << ',' << detail::fmt_percent(r.cell(f, c, a).eer_percent());
      out << '\n';
    }
}

/// Long format: every per-user, per-repetition EER behind every cell.
inline void write_cells_csv(const MatrixReport& r, std::ostream& out) {
  out << "features,classifier,aggregation,user_id,repetition,eer,status\n";
  for (const auto& cell : r.cells) {
    const std::string key = detail::csv_field(cell.feature_set) + ',' + detail::csv_field(cell.classifier) + ',' +
                            detail::csv_field(cell.aggregation) + ',';
    if (!cell.report) {
      out << key << ",,NA," << detail::csv_field("failed: " + cell.error) << '\n';
      continue;
    }
    const auto& rep = *cell.report;
    for (std::size_t u = 0; u < rep.user_ids.size(); ++u)
      for (std::size_t k = 0; k < rep.eer[u].size(); ++k) {
        out << key << detail::csv_field(rep.user_ids[u]) << ',' << k << ','
            << (rep.eer[u][k] ? detail::fmt_rate(*rep.eer[u][k]) : "NA") << ','
            << (rep.eer[u][k] ? "ok" : detail::csv_field("skipped: " + rep.skip_reason[u])) << '\n';
      }
  }
}

inline nlohmann::json matrix_to_json(const MatrixReport& r) {
  const std::size_t a = r.primary_aggregation();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t f = 0; f < r.feature_sets.size(); ++f) {
    nlohmann::json vals = nlohmann::json::array();
    for (std::size_t c = 0; c < r.classifiers.size(); ++c) vals.push_back(detail::json_num(r.cell(f, c, a).eer_percent()));
    rows.push_back({{"features", r.feature_sets[f]}, {"eer_percent", vals}, {"mean", detail::json_num(r.row_mean(f))}});
  }
  nlohmann::json col_means = nlohmann::json::array();
  for (std::size_t c = 0; c < r.classifiers.size(); ++c) col_means.push_back(detail::json_num(r.column_mean(c)));

  nlohmann::json agg_rows = nlohmann::json::array();
  for (std::size_t f = 0; f < r.feature_sets.size(); ++f)
    for (std::size_t c = 0; c < r.classifiers.size(); ++c) {
      nlohmann::json vals = nlohmann::json::array();
      for (std::size_t k = 0; k < r.aggregations.size(); ++k) vals.push_back(detail::json_num(r.cell(f, c, k).eer_percent()));
      agg_rows.push_back({{"features", r.feature_sets[f]}, {"classifier", r.classifiers[c]}, {"eer_percent", vals}});
    }

  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : r.cells) {
    nlohmann::json j{{"features", cell.feature_set}, {"classifier", cell.classifier}, {"aggregation", cell.aggregation}};
    if (!cell.error.empty()) j["error"] = cell.error;
    if (cell.report) j["report"] = cell.report->to_json();
    cells.push_back(j);
  }
  nlohmann::json j{{"config", r.config.to_json()},
                   {"users", r.users},
                   {"classifiers", r.classifiers},
                   {"aggregations", r.aggregations},
                   {"matrix", {{"aggregation", r.aggregations[a]}, {"rows", rows}, {"column_means", col_means}}},
                   {"aggregation_table", agg_rows},
                   {"failed_cells", r.failed_cells()},
                   {"cells", cells}};
  if (r.wall_seconds) j["wall_seconds"] = *r.wall_seconds;
  return j;
}

/// Writes matrix.csv, aggregation.csv and cells.csv, or report.json, into dir.
/// Returns the files written.
inline std::vector<fs::path> write_matrix_report(const MatrixReport& r, const fs::path& dir, const std::string& format) {
  fs::create_directories(dir);
  std::vector<fs::path> files;
  auto open = [&](const std::string& name) {
    files.push_back(dir / name);
    std::ofstream f(files.back(), std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + files.back().string());
    return f;
  };
  if (format == "csv") {
    {
      auto f = open("matrix.csv");
      write_matrix_csv(r, f);
    }
    {
      auto f = open("aggregation.csv");
      write_aggregation_csv(r, f);
    }
    {
      auto f = open("cells.csv");
      write_cells_csv(r, f);
    }
    if (r.wall_seconds) {
      auto f = open("timing.txt");
      f << "wall_seconds " << *r.wall_seconds << '\n';
    }
  } else {
    auto f = open("report.json");
    f << matrix_to_json(r).dump(2) << '\n';
  }
  return files;
}

}  // namespace touchauth
