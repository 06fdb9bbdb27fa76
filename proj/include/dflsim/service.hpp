#pragma once

// HTTP front end over the run store. Bodies are JSON. Training runs on a
// background thread and is polled through GET /models/{id}/status.

#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "dflsim/profiling.hpp"
#include "dflsim/run_store.hpp"
#include "dflsim/scenario_sim.hpp"
#include "dflsim/synthesis.hpp"
#include "dflsim/training.hpp"

namespace dflsim {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string data_dir = "dflsim-data";
  std::uint64_t default_seed = 0;

  /// DFLSIM_BIND (host:port), DFLSIM_DATA_DIR, DFLSIM_SEED.
  static ServiceConfig from_env() {
    ServiceConfig c;
    if (const char* b = std::getenv("DFLSIM_BIND")) c.set_bind(b);
    if (const char* d = std::getenv("DFLSIM_DATA_DIR")) c.data_dir = d;
    if (const char* s = std::getenv("DFLSIM_SEED")) {
      auto v = detail::parse_number(s);
      if (!v || *v < 0) throw ValidationError("DFLSIM_SEED must be a non-negative integer");
      c.default_seed = static_cast<std::uint64_t>(*v);
    }
    return c;
  }

  void set_bind(std::string_view bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string_view::npos) throw ValidationError("bind address must be host:port");
    host = std::string(bind.substr(0, colon));
    const auto p = detail::parse_number(bind.substr(colon + 1));
    if (!p || *p < 0 || *p > 65535 || *p != std::floor(*p)) throw ValidationError("invalid port in bind address");
    port = static_cast<int>(*p);
  }
};

namespace detail {

inline json error_body(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

inline void send_raw(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed request body: ") + e.what());
  }
}

/// A scenario given inline or as a preset name.
inline Scenario scenario_from_request(const json& j) {
  if (j.is_string()) {
    auto p = scenario_preset(j.get<std::string>());
    if (!p) throw ValidationError("unknown scenario preset '" + j.get<std::string>() + "'");
    return *p;
  }
  return Scenario::from_json(j);
}

}  // namespace detail

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir) {
    // httplib's default also sets SO_REUSEPORT, which would let a second
    // instance share the port instead of failing
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() { stop(); }

  /// Binds and starts listening on a background thread; returns the port.
  int start() {
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
      if (port < 0) throw Error("cannot bind " + config_.host);
    } else if (!server_.bind_to_port(config_.host, port)) {
      throw Error("cannot bind " + config_.host + ":" + std::to_string(port) + " (port in use?)");
    }
    port_ = port;
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Blocks until stop() is called from elsewhere.
  void wait() {
    if (listener_.joinable()) listener_.join();
  }

  /// Stops listening and waits for in-flight training jobs.
  void stop() {
    if (server_.is_running()) server_.stop();
    if (listener_.joinable()) listener_.join();
    std::vector<std::thread> jobs;
    {
      std::lock_guard lock(jobs_mutex_);
      jobs.swap(jobs_);
    }
    for (auto& t : jobs)
      if (t.joinable()) t.join();
  }

  int port() const { return port_; }
  RunStore& store() { return store_; }

 private:
  template <class Handler>
  auto guarded(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const ValidationError& e) {
        detail::send_json(res, 400, detail::error_body("validation", e.what()));
      } catch (const NumericError& e) {
        detail::send_json(res, 422, detail::error_body("numeric", e.what()));
      } catch (const std::exception& e) {
        detail::send_json(res, 500, detail::error_body("internal", e.what()));
      }
    };
  }

  void routes() {
    server_.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
      detail::send_json(res, 200, {{"status", "ok"}});
    }));

    server_.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
      detail::send_json(res, 200, store_.list_datasets());
    }));
    server_.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
      detail::send_json(res, 201, create_dataset(detail::parse_body(req)));
    }));
    server_.Get(R"(/datasets/([A-Za-z0-9-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto meta = store_.dataset_meta(req.matches[1]);
      if (!meta) return detail::send_json(res, 404, detail::error_body("not_found", "no dataset " + std::string(req.matches[1])));
      detail::send_json(res, 200, *meta);
    }));
    server_.Get(R"(/datasets/([A-Za-z0-9-]+)/profile)",
                guarded([this](const httplib::Request& req, httplib::Response& res) { profile(req.matches[1], res); }));

    server_.Get("/models", guarded([this](const httplib::Request&, httplib::Response& res) {
      json a = json::array();
      for (const auto& r : store_.list_runs(RunKind::Training)) a.push_back(r.to_json());
      detail::send_json(res, 200, a);
    }));
    server_.Post("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
      detail::send_json(res, 202, start_training(detail::parse_body(req)));
    }));
    server_.Get(R"(/models/([A-Za-z0-9-]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto rec = store_.record(req.matches[1]);
      if (!rec || rec->kind != RunKind::Training)
        return detail::send_json(res, 404, detail::error_body("not_found", "no model " + std::string(req.matches[1])));
      detail::send_json(res, 200, rec->to_json());
    }));
    server_.Get(R"(/models/([A-Za-z0-9-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      run_result(req.matches[1], RunKind::Training, res);
    }));

    server_.Get("/simulations", guarded([this](const httplib::Request&, httplib::Response& res) {
      json a = json::array();
      for (const auto& r : store_.list_runs(RunKind::Simulation)) a.push_back(r.to_json());
      detail::send_json(res, 200, a);
    }));
    server_.Post("/simulations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      detail::send_json(res, 201, run_simulation(detail::parse_body(req)));
    }));
    server_.Get(R"(/simulations/([A-Za-z0-9-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      run_result(req.matches[1], RunKind::Simulation, res);
    }));
  }

  /// {"synthesize": {"seed", "calibration": "appendixA" | spec}} or
  /// {"ingest": {"csv", "codebook"?}}.
  json create_dataset(const json& body) {
    Warnings warnings;
    json provenance;
    Dataset ds;
    if (body.contains("synthesize")) {
      const auto& s = body["synthesize"];
      const std::uint64_t seed = s.value("seed", config_.default_seed);
      SynthesisSpec spec = appendix_a_spec();
      std::string calibration = "appendixA";
      if (s.contains("calibration")) {
        if (s["calibration"].is_string()) {
          calibration = s["calibration"].get<std::string>();
          if (calibration != "appendixA") throw ValidationError("unknown calibration preset '" + calibration + "'");
        } else {
          spec = SynthesisSpec::from_json(s["calibration"]);
          calibration = "custom";
        }
      }
      ds = synthesize_dataset(spec, seed, &warnings);
      provenance = {{"kind", "synthetic"}, {"seed", seed}, {"calibration", calibration}};
    } else if (body.contains("ingest")) {
      const auto& in = body["ingest"];
      if (!in.contains("csv") || !in["csv"].is_string()) throw ValidationError("ingest needs a 'csv' string");
      const auto cb = in.contains("codebook") ? Codebook::from_json(in["codebook"]) : default_codebook();
      ds = Dataset::from_csv(cb, in["csv"].get<std::string>());
      provenance = {{"kind", "ingested"}, {"seed", nullptr}};
    } else {
      throw ValidationError("dataset request needs 'synthesize' or 'ingest'");
    }
    json meta{{"fingerprint", ds.fingerprint()},
              {"codebook", ds.codebook().name()},
              {"provenance", provenance},
              {"summary", summarize(ds).to_json()},
              {"created_at", utc_timestamp()},
              {"warnings", warnings}};
    const auto id = store_.add_dataset(ds, meta);
    meta["id"] = id;
    return meta;
  }

  std::shared_ptr<const Dataset> require_dataset(const std::string& id) {
    auto ds = store_.dataset(id);
    if (!ds) throw ValidationError("unknown dataset '" + id + "'");
    return ds;
  }

  // computed once per dataset, then served from the store
  void profile(const std::string& dataset_id, httplib::Response& res) {
    if (!store_.dataset_meta(dataset_id))
      return detail::send_json(res, 404, detail::error_body("not_found", "no dataset " + dataset_id));
    std::lock_guard lock(profile_mutex_);
    for (const auto& r : store_.list_runs(RunKind::Profile))
      if (r.request.value("dataset_id", "") == dataset_id && r.status == "done") {
        res.set_header("X-Run-Id", r.id);
        return detail::send_raw(res, 200, *store_.result(r.id));
      }
    const auto ds = require_dataset(dataset_id);
    auto rec = store_.create_run(RunKind::Profile, {{"dataset_id", dataset_id}}, {{"dataset", ds->fingerprint()}});
    json result = to_json(profile_dataset(*ds));
    result["dataset_id"] = dataset_id;
    result["dataset_fingerprint"] = ds->fingerprint();
    const auto text = result.dump(2) + "\n";
    store_.complete_run(rec.id, text);
    res.set_header("X-Run-Id", rec.id);
    detail::send_raw(res, 200, text);
  }

  json start_training(const json& body) {
    if (!body.contains("dataset_id")) throw ValidationError("training request needs 'dataset_id'");
    const auto dataset_id = body["dataset_id"].get<std::string>();
    const auto ds = require_dataset(dataset_id);
    auto request = TrainingRequest::from_json(body);
    if (!body.contains("split") || !body["split"].contains("seed")) request.split.seed = config_.default_seed;
    json req_json = request.to_json();
    req_json["dataset_id"] = dataset_id;
    auto rec = store_.create_run(RunKind::Training, req_json, {{"dataset", ds->fingerprint()}});
    const auto id = rec.id;
    std::lock_guard lock(jobs_mutex_);
    jobs_.emplace_back([this, id, ds, request, dataset_id] {
      try {
        const auto result = train_and_select(*ds, request);
        json doc{{"model_id", id},
                 {"dataset_id", dataset_id},
                 {"report", result.report_json()},
                 {"artifact", result.artifact_json()}};
        if (!result.levers) doc["lever_error"] = result.lever_error;
        store_.complete_run(id, doc.dump(2) + "\n", {{"model", result.chosen().model.fingerprint()}});
      } catch (const std::exception& e) {
        store_.fail_run(id, e.what());
      }
    });
    return rec.to_json();
  }

  std::shared_ptr<const TrainedModel> require_model(const std::string& id) {
    std::lock_guard lock(models_mutex_);
    if (auto it = models_.find(id); it != models_.end()) return it->second;
    auto rec = store_.record(id);
    if (!rec || rec->kind != RunKind::Training) throw ValidationError("unknown model '" + id + "'");
    if (rec->status != "done") throw ValidationError("model '" + id + "' is " + rec->status);
    const auto doc = json::parse(*store_.result(id));
    auto m = std::make_shared<const TrainedModel>(TrainedModel::from_json(doc.at("artifact")));
    models_[id] = m;
    return m;
  }

  /// {"model_id", "scenario": {...} | "preset", "dataset_id"?, "disaggregate"?: [fields]}
  /// or "scenarios": [...] to add the responder partition across them.
  json run_simulation(const json& body) {
    if (!body.contains("model_id")) throw ValidationError("simulation request needs 'model_id'");
    const auto model_id = body["model_id"].get<std::string>();
    const auto model = require_model(model_id);
    const auto model_doc = json::parse(*store_.result(model_id));
    const auto dataset_id = body.value("dataset_id", model_doc.at("dataset_id").get<std::string>());
    const auto ds = require_dataset(dataset_id);

    std::vector<Scenario> scenarios;
    if (body.contains("scenarios")) {
      for (const auto& s : body["scenarios"]) scenarios.push_back(detail::scenario_from_request(s));
    } else if (body.contains("scenario")) {
      scenarios.push_back(detail::scenario_from_request(body["scenario"]));
    }
    if (scenarios.empty()) throw ValidationError("simulation request needs 'scenario' or 'scenarios'");
    std::vector<std::string> fields;
    if (body.contains("disaggregate"))
      for (const auto& f : body["disaggregate"]) fields.push_back(f.get<std::string>());
    for (const auto& s : scenarios) validate_scenario(s, ds->codebook());

    std::vector<SimulationResult> results;
    json runs = json::array();
    for (const auto& s : scenarios) {
      results.push_back(simulate(*ds, *model, s));
      json one = results.back().to_json();
      if (!fields.empty()) one["subgroups"] = to_json(disaggregate(results.back(), *ds, fields));
      runs.push_back(std::move(one));
    }
    json result{{"model_id", model_id},
                {"dataset_id", dataset_id},
                {"training_seed", model_doc.at("artifact").at("seed")},
                {"model_fingerprint", model->fingerprint()},
                {"dataset_fingerprint", ds->fingerprint()}};
    if (body.contains("scenarios")) {
      result["results"] = std::move(runs);
      result["responders"] = partition_responders(results, *ds).to_json();
    } else {
      result["result"] = std::move(runs[0]);
    }
    json request = body;
    auto rec = store_.create_run(RunKind::Simulation, request,
                                 {{"model", model->fingerprint()}, {"dataset", ds->fingerprint()}});
    const auto text = result.dump(2) + "\n";
    store_.complete_run(rec.id, text);
    auto out = store_.record(rec.id)->to_json();
    out["result"] = std::move(result);
    return out;
  }

  void run_result(const std::string& id, RunKind kind, httplib::Response& res) {
    auto rec = store_.record(id);
    if (!rec || rec->kind != kind)
      return detail::send_json(res, 404, detail::error_body("not_found", "no " + to_string(kind) + " run " + id));
    if (rec->status == "running") return detail::send_json(res, 202, rec->to_json());
    if (rec->status == "failed") return detail::send_json(res, 409, rec->to_json());
    res.set_header("X-Run-Id", id);
    detail::send_raw(res, 200, *store_.result(id));
  }

  ServiceConfig config_;
  RunStore store_;
  httplib::Server server_;
  std::thread listener_;
  int port_ = 0;
  std::mutex jobs_mutex_, models_mutex_, profile_mutex_;
  std::vector<std::thread> jobs_;
  std::map<std::string, std::shared_ptr<const TrainedModel>> models_;
};

}  // namespace dflsim
