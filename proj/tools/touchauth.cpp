// touchauth: command-line front end for ingestion, feature extraction, selection,
// evaluation and synthetic data generation.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 some cells failed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "touchauth/touchauth.hpp"

namespace fs = std::filesystem;
using namespace touchauth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitPartial = 4;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<int> workers;
};

std::string output_format(const CommonFlags& f, const std::string& fallback) {
  return f.format.empty() ? fallback : f.format;
}

fs::path output_dir(const CommonFlags& f, const fs::path& fallback) { return f.out.empty() ? fallback : fs::path(f.out); }

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Config, "cannot open " + p.string());
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, p.string() + " is not valid JSON: " + e.what());
  }
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  return out;
}

void print_parse_report(const std::string& what, const ParseReport& r) {
  std::fprintf(stderr, "%s: %zu lines, %zu records, %zu malformed, %zu multi-touch events dropped\n", what.c_str(),
               r.lines, r.records, r.malformed_count, r.dropped_pointer_events);
  std::fprintf(stderr, "  strokes: %zu kept, %zu taps, %zu unterminated, %zu duplicate-timestamp samples collapsed\n",
               r.segmentation.swipes, r.segmentation.taps, r.segmentation.unterminated,
               r.segmentation.duplicate_samples);
}

Dataset read_canonical_file(const fs::path& p, ParseReport& report) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  Dataset ds = parse_canonical(in, &report);
  if (ds.name.empty()) ds.name = p.stem().string();
  return ds;
}

// ingest: raw export + adapter -> canonical file
int cmd_ingest(const CommonFlags& flags, const std::vector<std::string>& inputs) {
  if (flags.config.empty()) throw Error(ErrorKind::Config, "ingest needs --config ADAPTER");
  if (inputs.empty()) throw Error(ErrorKind::Config, "ingest needs at least one input file");
  std::ifstream cfg_in(flags.config);
  if (!cfg_in) throw Error(ErrorKind::Config, "cannot open adapter config " + flags.config);
  const AdapterConfig cfg = parse_adapter_config(cfg_in);

  std::stringstream canonical;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::ifstream in(inputs[i]);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + inputs[i]);
    std::stringstream part;
    const AdapterReport ar = apply_adapter(in, cfg, part);
    std::fprintf(stderr, "%s: %zu rows converted, %zu skipped\n", inputs[i].c_str(), ar.written, ar.skipped);
    std::string line;
    bool first = true;
    while (std::getline(part, line)) {
      if (first && i > 0) {  // drop repeated headers
        first = false;
        continue;
      }
      first = false;
      canonical << line << '\n';
    }
  }
  ParseReport report;
  const Dataset ds = parse_canonical(canonical, &report);
  print_parse_report("canonical", report);

  const std::string format = output_format(flags, "csv");
  const fs::path dir = output_dir(flags, ".");
  const fs::path file = dir / (format == "json" ? "canonical.jsonl" : "canonical.csv");
  auto out = open_output(file);
  if (format == "json")
    write_canonical_jsonl(ds, out);
  else
    write_canonical_csv(ds, out);
  std::fprintf(stderr, "wrote %s (%zu users, %zu swipes)\n", file.string().c_str(), ds.users.size(), ds.swipe_count());
  return kExitOk;
}

// extract: canonical file -> per-swipe feature matrix
int cmd_extract(const CommonFlags& flags, const std::string& input, bool catalog) {
  if (catalog) {
    const fs::path file = output_dir(flags, ".") / "catalog.json";
    auto out = open_output(file);
    out << catalog_to_json().dump(2) << '\n';
    std::fprintf(stderr, "wrote %s\n", file.string().c_str());
    if (input.empty()) return kExitOk;
  }
  if (input.empty()) throw Error(ErrorKind::Config, "extract needs an input file");
  ParseReport report;
  const Dataset ds = read_canonical_file(input, report);
  print_parse_report(input, report);
  const FeatureTable table = extract_dataset(ds);
  const std::string format = output_format(flags, "csv");
  const fs::path file = output_dir(flags, ".") / (format == "json" ? "features.jsonl" : "features.csv");
  auto out = open_output(file);
  if (format == "json")
    write_feature_jsonl(ds, table, out);
  else
    write_feature_csv(ds, table, out);
  std::fprintf(stderr, "wrote %s (%zu swipes)\n", file.string().c_str(), ds.swipe_count());
  return kExitOk;
}

// select: ANOVA selection over several datasets
int cmd_select(const CommonFlags& flags) {
  if (flags.config.empty()) throw Error(ErrorKind::Config, "select needs --config");
  const fs::path cfg_path = flags.config;
  const auto j = read_json_file(cfg_path);
  const AnovaSource src = AnovaSource::from_json(j, cfg_path.parent_path());
  if (src.datasets.size() < 2) throw Error(ErrorKind::Config, "select needs at least two 'datasets'");
  std::vector<DatasetSource> datasets = src.datasets;
  if (flags.seed)
    for (auto& d : datasets)
      if (d.synthetic) d.synthetic->seed += *flags.seed;
  const SelectionResult res = run_selection(datasets, src.selection);

  const std::string format = output_format(flags, "json");
  const fs::path dir = output_dir(flags, ".");
  if (format == "json") {
    auto out = open_output(dir / "selection.json");
    out << to_json(res, src.selection).dump(2) << '\n';
  } else {
    auto out = open_output(dir / "selection.csv");
    out << "feature_id,name,votes,selected";
    for (const auto& r : res.rankings) out << ",f_" << detail::csv_field(r.name);
    out << '\n';
    for (int id = 1; id <= kFeatureCount; ++id) {
      const auto k = static_cast<std::size_t>(id - 1);
      const bool sel = std::binary_search(res.selected.begin(), res.selected.end(), id);
      out << id << ',' << detail::csv_field(std::string(feature_def(id).name)) << ',' << res.votes[k] << ','
          << (sel ? 1 : 0);
      for (const auto& r : res.rankings) out << ',' << detail::fmt_rate(r.f_scores[k]);
      out << '\n';
    }
  }
  std::fprintf(stderr, "selected %zu features\n", res.selected.size());
  return kExitOk;
}

ExperimentConfig load_experiment(const CommonFlags& flags) {
  if (flags.config.empty()) throw Error(ErrorKind::Config, "--config is required");
  ExperimentConfig cfg = ExperimentConfig::load(flags.config);
  if (flags.seed) cfg.set_seed(*flags.seed);
  if (!flags.out.empty()) cfg.output.dir = flags.out;
  if (!flags.format.empty()) cfg.output.format = flags.format;
  if (flags.workers) cfg.workers = *flags.workers;
  return cfg;
}

void print_matrix_summary(const MatrixReport& r) {
  std::ostringstream os;
  write_matrix_csv(r, os);
  std::fputs(os.str().c_str(), stdout);
  if (r.failed_cells()) std::fprintf(stderr, "%zu of %zu cells failed\n", r.failed_cells(), r.cells.size());
}

// evaluate: one feature set x one classifier (any number of aggregations)
int cmd_evaluate(const CommonFlags& flags) {
  const ExperimentConfig cfg = load_experiment(flags);
  if (cfg.feature_sets.size() != 1 || cfg.classifiers.size() != 1)
    throw Error(ErrorKind::Config, "evaluate takes a single feature_set and classifier; use 'matrix' for grids");
  const MatrixReport r = run_matrix(cfg);
  for (const auto& f : write_matrix_report(r, cfg.output.dir, cfg.output.format))
    std::fprintf(stderr, "wrote %s\n", f.string().c_str());
  for (const auto& cell : r.cells)
    std::printf("%s %s %s: %s%%\n", cell.feature_set.c_str(), cell.classifier.c_str(), cell.aggregation.c_str(),
                detail::fmt_percent(cell.eer_percent()).c_str());
  return r.failed_cells() ? kExitPartial : kExitOk;
}

int cmd_matrix(const CommonFlags& flags) {
  const ExperimentConfig cfg = load_experiment(flags);
  const MatrixReport r = run_matrix(cfg);
  for (const auto& f : write_matrix_report(r, cfg.output.dir, cfg.output.format))
    std::fprintf(stderr, "wrote %s\n", f.string().c_str());
  print_matrix_summary(r);
  return r.failed_cells() ? kExitPartial : kExitOk;
}

int cmd_synth(const CommonFlags& flags) {
  SyntheticSpec spec;
  if (!flags.config.empty()) {
    auto j = read_json_file(flags.config);
    spec = SyntheticSpec::from_json(j.contains("synthetic") ? j.at("synthetic") : j);
  }
  if (flags.seed) spec.seed = *flags.seed;
  const Dataset ds = generate_synthetic(spec);
  const std::string format = output_format(flags, "csv");
  const fs::path file = output_dir(flags, ".") / (format == "json" ? "synthetic.jsonl" : "synthetic.csv");
  auto out = open_output(file);
  if (format == "json")
    write_canonical_jsonl(ds, out);
  else
    write_canonical_csv(ds, out);
  std::fprintf(stderr, "wrote %s (%zu users, %zu swipes)\n", file.string().c_str(), ds.users.size(), ds.swipe_count());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Touch-based continuous authentication benchmark"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::vector<std::string> inputs;
  std::string input;
  bool catalog = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Config file");
    sub->add_option("--seed", flags.seed, "Master seed (overrides the config)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* ingest = app.add_subcommand("ingest", "Convert a raw export to the canonical format via an adapter");
  add_common(ingest);
  ingest->add_option("inputs", inputs, "Raw input files")->required();
  auto* extract = app.add_subcommand("extract", "Compute the 149 swipe features of a canonical file");
  add_common(extract);
  extract->add_option("input", input, "Canonical CSV or JSON-lines file");
  extract->add_flag("--catalog", catalog, "Also write catalog.json (feature definitions and study subsets)");
  auto* select = app.add_subcommand("select", "Cross-dataset ANOVA feature selection");
  add_common(select);
  auto* evaluate = app.add_subcommand("evaluate", "Run one experiment configuration");
  add_common(evaluate);
  auto* matrix = app.add_subcommand("matrix", "Run a feature set x classifier x aggregation grid");
  add_common(matrix);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic canonical dataset");
  add_common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*ingest) return cmd_ingest(flags, inputs);
    if (*extract) return cmd_extract(flags, input, catalog);
    if (*select) return cmd_select(flags);
    if (*evaluate) return cmd_evaluate(flags);
    if (*matrix) return cmd_matrix(flags);
    if (*synth) return cmd_synth(flags);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (is_data_error(e.kind())) return kExitData;
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::UnknownFeatureId:
      case ErrorKind::UnknownStudy:
        return kExitConfig;
      default:
        return kExitData;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
