// dflsim: synth | ingest | profile | train | simulate | serve | report
//
// Every command writes under --out. JSON outputs carry a "provenance" block
// echoing the effective flags; nothing time-dependent is written, so equal
// flags give byte-identical files.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dflsim/competency_index.hpp"
#include "dflsim/profiling.hpp"
#include "dflsim/report.hpp"
#include "dflsim/scenario_sim.hpp"
#include "dflsim/service.hpp"
#include "dflsim/synthesis.hpp"
#include "dflsim/training.hpp"

using namespace dflsim;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Flags {
  std::string out = "out";
  std::string codebook, data, model, calibration = "appendixA", families = "linear,forest,boosting", bind;
  std::string disaggregate = "country,gender,area";
  std::vector<std::string> scenarios;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  int folds = 10;
  bool clip = true, clip_set = false;
};

json provenance(const std::string& command, json flags) {
  return {{"tool", "dflsim"}, {"version", kVersion}, {"command", command}, {"flags", std::move(flags)}};
}

std::string path_in(const Flags& f, const std::string& name) { return (fs::path(f.out) / name).string(); }

void write_json(const Flags& f, const std::string& name, const json& doc) {
  write_text_file(path_in(f, name), doc.dump(2) + "\n");
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

/// --data / --codebook, falling back to the files a previous synth or
/// ingest left in --out.
Dataset load_input(const Flags& f, json& echo) {
  const auto data = f.data.empty() ? path_in(f, "data.csv") : f.data;
  std::string cb_path = f.codebook;
  if (cb_path.empty() && fs::exists(path_in(f, "codebook.json"))) cb_path = path_in(f, "codebook.json");
  echo["data"] = data;
  echo["codebook"] = cb_path.empty() ? json("default") : json(cb_path);
  if (!fs::exists(data)) throw ValidationError("data file '" + data + "' not found (run synth or ingest, or pass --data)");
  const auto cb = cb_path.empty() ? default_codebook() : load_codebook(cb_path);
  Provenance prov;
  if (f.data.empty() && fs::exists(path_in(f, "synth.json"))) {
    const auto s = read_json(path_in(f, "synth.json"));
    prov.kind = ProvenanceKind::Synthetic;
    prov.seed = s.at("seed").get<std::uint64_t>();
  }
  return Dataset::from_csv(cb, read_text_file(data), prov);
}

void prepare_out(const Flags& f) {
  std::error_code ec;
  fs::create_directories(f.out, ec);
  if (ec) throw Error("cannot create output directory '" + f.out + "': " + ec.message());
}

int cmd_synth(const Flags& f) {
  prepare_out(f);
  SynthesisSpec spec;
  if (f.calibration == "appendixA") spec = appendix_a_spec();
  else spec = SynthesisSpec::from_json(read_json(f.calibration));
  Warnings warnings;
  const auto ds = synthesize_dataset(spec, f.seed, &warnings);
  write_dataset(ds, path_in(f, "codebook.json"), path_in(f, "data.csv"));
  write_json(f, "synth.json",
             {{"provenance", provenance("synth", {{"seed", f.seed}, {"calibration", f.calibration}, {"out", f.out}})},
              {"seed", f.seed},
              {"calibration", spec.to_json()},
              {"fingerprint", ds.fingerprint()},
              {"summary", summarize(ds).to_json()},
              {"warnings", warnings}});
  std::cout << "synth: " << ds.size() << " records, fingerprint " << ds.fingerprint() << " -> " << f.out << "\n";
  return 0;
}

int cmd_ingest(const Flags& f) {
  if (f.data.empty()) throw ValidationError("ingest needs --data");
  prepare_out(f);
  const auto cb = f.codebook.empty() ? default_codebook() : load_codebook(f.codebook);
  const auto ds = Dataset::from_csv(cb, read_text_file(f.data));
  write_dataset(ds, path_in(f, "codebook.json"), path_in(f, "data.csv"));
  write_json(f, "ingest.json",
             {{"provenance", provenance("ingest", {{"codebook", f.codebook.empty() ? json("default") : json(f.codebook)},
                                                   {"data", f.data},
                                                   {"out", f.out}})},
              {"fingerprint", ds.fingerprint()},
              {"summary", summarize(ds).to_json()}});
  std::cout << "ingest: " << ds.size() << " records, fingerprint " << ds.fingerprint() << " -> " << f.out << "\n";
  return 0;
}

int cmd_profile(const Flags& f) {
  prepare_out(f);
  json echo{{"out", f.out}};
  const auto ds = load_input(f, echo);
  json doc = to_json(profile_dataset(ds));
  doc["provenance"] = provenance("profile", echo);
  doc["dataset_fingerprint"] = ds.fingerprint();
  write_json(f, "profile.json", doc);
  write_text_file(path_in(f, "scores.csv"), scores_to_csv(ds, score_dataset(ds)));
  std::cout << "profile: " << doc["countries"].size() << " countries -> " << path_in(f, "profile.json") << "\n";
  return 0;
}

int cmd_train(const Flags& f) {
  prepare_out(f);
  TrainingRequest req;
  req.split.seed = f.seed;
  req.split.test_fraction = f.test_fraction;
  req.split.folds = f.folds;
  req.families = TrainingRequest::parse_families(f.families);
  if (req.families.empty()) throw ValidationError("--families lists no model family");
  json echo{{"out", f.out}, {"seed", f.seed}, {"test_fraction", f.test_fraction}, {"folds", f.folds}, {"families", f.families}};
  const auto ds = load_input(f, echo);
  const auto result = train_and_select(ds, req);
  const auto prov = provenance("train", echo);
  json report = result.report_json();
  report["provenance"] = prov;
  write_json(f, "training_report.json", report);
  json artifact = result.artifact_json();
  artifact["provenance"] = prov;
  write_json(f, "model.json", artifact);
  if (result.levers) write_text_file(path_in(f, "levers.csv"), result.levers->to_csv());
  const auto& e = result.chosen().report;
  std::cout << "train: chosen " << to_string(result.selection.chosen) << " (test R2 "
            << (e.test_r2 ? report::fixed(*e.test_r2, 4) : "n/a") << ") -> " << path_in(f, "model.json") << "\n";
  if (!result.levers) std::cout << "train: " << result.lever_error << "\n";
  return 0;
}

std::vector<Scenario> resolve_scenarios(const Flags& f) {
  std::vector<Scenario> out;
  for (const auto& s : f.scenarios) {
    if (s == "all") {
      for (const auto& [name, levers] : scenario_presets()) out.push_back(*scenario_preset(name));
    } else if (auto p = scenario_preset(s)) {
      out.push_back(*p);
    } else if (fs::exists(s)) {
      const auto j = read_json(s);
      if (j.is_array())
        for (const auto& x : j) out.push_back(Scenario::from_json(x));
      else
        out.push_back(Scenario::from_json(j));
    } else {
      throw ValidationError("'" + s + "' is neither a scenario preset nor a scenario file");
    }
  }
  if (out.empty()) throw ValidationError("simulate needs --scenario");
  if (f.clip_set)
    for (auto& s : out) s.clip = f.clip;
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

int cmd_simulate(const Flags& f) {
  prepare_out(f);
  const auto model_path = f.model.empty() ? path_in(f, "model.json") : f.model;
  json echo{{"out", f.out}, {"model", model_path}, {"scenario", f.scenarios}, {"disaggregate", f.disaggregate}};
  echo["clip"] = f.clip_set ? json(f.clip) : json("scenario");
  if (!fs::exists(model_path)) throw ValidationError("model file '" + model_path + "' not found (run train, or pass --model)");
  const auto artifact = read_json(model_path);
  const auto model = TrainedModel::from_json(artifact);
  const auto ds = load_input(f, echo);
  const auto scenarios = resolve_scenarios(f);
  std::vector<std::string> fields;
  for (const auto& name : split_list(f.disaggregate)) {
    auto i = ds.codebook().find(name);
    if (!i) throw ValidationError("unknown disaggregation field '" + name + "'");
    fields.push_back(name);
  }

  std::vector<SimulationResult> results;
  json summaries = json::array();
  for (const auto& s : scenarios) {
    results.push_back(simulate(ds, model, s));
    json one = results.back().summary_json();
    if (!fields.empty()) one["subgroups"] = to_json(disaggregate(results.back(), ds, fields));
    summaries.push_back(std::move(one));
  }
  json doc{{"provenance", provenance("simulate", echo)},
           {"model_fingerprint", model.fingerprint()},
           {"dataset_fingerprint", ds.fingerprint()},
           {"training_seed", artifact.value("seed", json(nullptr))},
           {"results", summaries}};
  if (results.size() >= 2) doc["responders"] = partition_responders(results, ds).to_json();
  write_json(f, "simulation.json", doc);

  std::string csv = "record_id,baseline_points";
  for (const auto& r : results) csv += "," + detail::csv_escape("delta_points:" + r.scenario.name);
  csv += "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    csv += detail::csv_escape(results[0].record_ids[i]) + "," + detail::format_number(results[0].baseline[i]);
    for (const auto& r : results) csv += "," + detail::format_number(r.delta[i]);
    csv += "\n";
  }
  write_text_file(path_in(f, "simulation_records.csv"), csv);
  for (const auto& r : results)
    std::cout << "simulate: " << r.scenario.name << " reach " << report::fixed(100.0 * r.reach) << "% gain "
              << report::fixed(r.population_gain_pct()) << " pp\n";
  return 0;
}

int cmd_report(const Flags& f) {
  json sources = json::object();
  std::string body;
  auto load = [&](const char* name) -> std::optional<json> {
    const auto p = path_in(f, name);
    if (!fs::exists(p)) return std::nullopt;
    auto j = read_json(p);
    sources[name] = j.value("provenance", json(nullptr));
    return j;
  };
  if (auto p = load("profile.json")) {
    body += report::country_stats(*p) + "\n";
    body += report::gap_table("Demographic gaps (DFC, percentage points)", (*p)["demographic_gaps"]) + "\n";
    body += report::gap_table("Socio-economic gaps (DFC, percentage points)", (*p)["socioeconomic_gaps"]) + "\n";
  }
  if (auto t = load("training_report.json")) {
    body += report::evaluation(*t) + "\n";
    if (t->contains("lever_table")) body += report::lever_table((*t)["lever_table"]) + "\n";
    else body += "## Predictive weights\n\n" + (*t)["lever_error"].get<std::string>() + "\n\n";
  }
  if (auto s = load("simulation.json")) body += report::scenarios(*s) + "\n";
  if (sources.empty())
    throw ValidationError("nothing to report in '" + f.out + "' (run profile, train or simulate first)");
  const json prov = provenance("report", {{"out", f.out}});
  std::string text = "# DFL simulation report\n\n<!-- provenance: " + prov.dump() + " -->\n";
  for (auto it = sources.begin(); it != sources.end(); ++it)
    text += "<!-- source " + it.key() + ": " + it.value().dump() + " -->\n";
  text += "\n" + body;
  write_text_file(path_in(f, "report.md"), text);
  std::cout << "report: " << path_in(f, "report.md") << "\n";
  return 0;
}

int cmd_serve(const Flags& f, bool out_set, bool seed_set) {
  auto cfg = ServiceConfig::from_env();
  if (!f.bind.empty()) cfg.set_bind(f.bind);
  if (out_set) cfg.data_dir = f.out;
  if (seed_set) cfg.default_seed = f.seed;
  // handle termination on this thread; service threads inherit the mask
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  Service svc(cfg);
  const int port = svc.start();
  std::cout << "serve: listening on " << cfg.host << ":" << port << ", data in " << cfg.data_dir << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  svc.stop();
  return 0;
}

void fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital financial literacy profiling, modelling and scenario simulation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;

  auto out_opt = [&](CLI::App* c) { return c->add_option("--out", f.out, "Output directory")->capture_default_str(); };
  auto data_opts = [&](CLI::App* c) {
    c->add_option("--codebook", f.codebook, "Codebook JSON (default: <out>/codebook.json, else the built-in one)");
    c->add_option("--data", f.data, "Survey CSV (default: <out>/data.csv)");
  };

  auto* synth = app.add_subcommand("synth", "Generate a calibrated synthetic survey");
  synth->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  synth->add_option("--calibration", f.calibration, "'appendixA' or a calibration spec JSON file")->capture_default_str();
  out_opt(synth);

  auto* ingest = app.add_subcommand("ingest", "Validate a survey CSV against a codebook");
  data_opts(ingest);
  out_opt(ingest);

  auto* profile = app.add_subcommand("profile", "Country statistics, CV discriminance and gap tables");
  data_opts(profile);
  out_opt(profile);

  auto* train = app.add_subcommand("train", "Cross-validate, evaluate and select a model");
  data_opts(train);
  out_opt(train);
  train->add_option("--seed", f.seed, "Split and ensemble seed")->capture_default_str();
  train->add_option("--test-fraction", f.test_fraction, "Hold-out fraction")->capture_default_str();
  train->add_option("--folds", f.folds, "Cross-validation folds")->capture_default_str();
  train->add_option("--families", f.families, "Comma-separated: linear,forest,boosting")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Run what-if scenarios through a trained model");
  data_opts(sim);
  out_opt(sim);
  sim->add_option("--model", f.model, "Model artifact (default: <out>/model.json)");
  sim->add_option("--scenario", f.scenarios, "Preset name, 'all', or scenario JSON file (repeatable)")->required();
  sim->add_flag_function(
      "--clip,!--no-clip",
      [&](std::int64_t n) {
        f.clip = n > 0;
        f.clip_set = true;
      },
      "Clip predictions to the index range (default: per scenario)");
  sim->add_option("--disaggregate", f.disaggregate, "Comma-separated subgroup fields")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", f.bind, "host:port (default: DFLSIM_BIND or 127.0.0.1:8080)");
  auto* serve_out = serve->add_option("--out", f.out, "Data directory (default: DFLSIM_DATA_DIR or dflsim-data)");
  auto* serve_seed = serve->add_option("--seed", f.seed, "Default seed for requests without one");

  auto* rep = app.add_subcommand("report", "Render report.md from the documents in --out");
  out_opt(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth(f);
    if (*ingest) return cmd_ingest(f);
    if (*profile) return cmd_profile(f);
    if (*train) return cmd_train(f);
    if (*sim) return cmd_simulate(f);
    if (*rep) return cmd_report(f);
    if (*serve) return cmd_serve(f, serve_out->count() > 0, serve_seed->count() > 0);
  } catch (const ValidationError& e) {
    fail("validation", e.what());
    return 2;
  } catch (const NumericError& e) {
    fail("numeric", e.what());
    return 3;
  } catch (const std::exception& e) {
    fail("error", e.what());
    return 1;
  }
  return 1;
}
