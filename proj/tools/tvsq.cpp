// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: generate, prep, train, predict, order, analyze,
// eval. Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvsq/tvsq.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kNumerical = 2, kIo = 3 };

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel g_log = LogLevel::kInfo;

void info(const std::string& msg) {
  if (g_log != LogLevel::kQuiet) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
  if (g_log == LogLevel::kDebug) std::cerr << msg << '\n';
}

std::string num(double x) { return tvsq::format_number(x); }

std::string opt_num(const std::optional<double>& x) {
  return x ? num(*x) : "undefined";
}

/// "1-6", "2,4,8" or a mix such as "1-3,6".
std::vector<std::size_t> parse_orders(const std::string& spec) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t end = spec.find(',', pos);
    if (end == std::string::npos) end = spec.size();
    const std::string part = spec.substr(pos, end - pos);
    const std::size_t dash = part.find('-');
    try {
      std::size_t used = 0;
      if (dash == std::string::npos) {
        const unsigned long v = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
        out.push_back(v);
      } else {
        std::size_t u1 = 0;
        std::size_t u2 = 0;
        const unsigned long lo = std::stoul(part.substr(0, dash), &u1);
        const unsigned long hi = std::stoul(part.substr(dash + 1), &u2);
        if (u1 != dash || u2 != part.size() - dash - 1 || lo > hi) {
          throw std::invalid_argument(part);
        }
        for (unsigned long r = lo; r <= hi; ++r) out.push_back(r);
      }
    } catch (const std::logic_error&) {
      throw tvsq::ContractError("bad order list '" + spec + "'");
    }
    pos = end + 1;
  }
  return out;
}

tvsq::InitKind parse_init(const std::string& s) {
  if (s == "pinned") return tvsq::InitKind::kPinned;
  if (s == "zero") return tvsq::InitKind::kZeroState;
  return tvsq::InitKind::kHoldFirstInput;
}

tvsq::TrainConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return tvsq::train_config_from_json(tvsq::read_json(path));
}

struct Globals {
  std::string log_level = "info";
  std::string out_dir = ".";
};

// ------------------------------------------------------------ generate

struct GenerateArgs {
  std::string spec;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  tvsq::GroundTruthSpec spec =
      tvsq::ground_truth_spec_from_json(tvsq::read_json(a.spec));
  if (a.seed) spec.target.seed = *a.seed;
  const tvsq::GroundTruth gt = tvsq::generate_ground_truth(spec);
  const fs::path out(g.out_dir);
  tvsq::save_dataset(out / "dataset.json", gt.data,
                     {{"generator", "synthetic"},
                      {"spec", tvsq::to_json(spec)}});
  tvsq::save_model(out / "truth.json", gt.truth);
  for (std::size_t n = 0; n < gt.clean.size(); ++n) {
    tvsq::TraceRecord clean = gt.data.items[n];
    clean.tvsq.values = gt.clean[n];
    tvsq::write_trace_csv(out / "clean" / (clean.name + ".csv"), clean);
  }
  info("wrote " + std::to_string(gt.data.size()) + " traces to " +
       (out / "dataset.json").string());
  return kOk;
}

// ---------------------------------------------------------------- prep

struct PrepArgs {
  std::string scores;
  std::string reference;
  std::string stsq;
};

int cmd_prep(const Globals& g, const PrepArgs& a) {
  const tvsq::SubjectScorePanel panel =
      tvsq::read_panel_csv(a.scores, a.reference);
  const tvsq::Aggregation agg = tvsq::aggregate_tvsq(panel);
  if (agg.clamped > 0) {
    info("warning: " + std::to_string(agg.clamped) +
         " mean Z-scores clamped to [-4, 4]");
  }
  const fs::path out(g.out_dir);
  const std::size_t J = agg.traces.size();
  const std::size_t T = panel.scores.seconds();
  if (a.stsq.empty()) {
    for (std::size_t j = 0; j < J; ++j) {
      std::string csv = "t,tvsq,ci\n";
      for (std::size_t t = 0; t < T; ++t) {
        csv += std::to_string(t + 1) + ',' + num(agg.traces[j].values[t]) +
               ',' + num(agg.traces[j].ci[t]) + '\n';
      }
      tvsq::write_text(out / ("video_" + std::to_string(j + 1) + ".csv"), csv);
    }
    info("wrote " + std::to_string(J) + " TVSQ traces to " + out.string());
    return kOk;
  }
  const tvsq::CsvTable table = tvsq::read_csv(a.stsq);
  const auto c = table.columns({"video", "t", "stsq"});
  std::vector<tvsq::Series> stsq(J, tvsq::Series(T, 0.0));
  std::vector<std::vector<bool>> seen(J, std::vector<bool>(T, false));
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const std::size_t j = table.integer(k, c[0]);
    const std::size_t t = table.integer(k, c[1]);
    if (j < 1 || j > J) table.fail(k, c[0], "video index out of range");
    if (t < 1 || t > T) table.fail(k, c[1], "t out of range");
    if (seen[j - 1][t - 1]) table.fail(k, c[1], "duplicate row");
    seen[j - 1][t - 1] = true;
    stsq[j - 1][t - 1] = table.number(k, c[2]);
  }
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      if (!seen[j][t]) {
        throw tvsq::ParseError(
            a.stsq, table.lines.empty() ? 2 : table.lines.back() + 1, 1,
            "no stsq for video " + std::to_string(j + 1) + ", t " +
                std::to_string(t + 1));
      }
    }
  }
  tvsq::TrainingDataset data;
  for (std::size_t j = 0; j < J; ++j) {
    tvsq::TraceRecord rec;
    rec.name = panel.session + "_video_" + std::to_string(j + 1);
    rec.group = rec.name;
    rec.stsq = stsq[j];
    rec.tvsq = agg.traces[j];
    data.items.push_back(std::move(rec));
  }
  tvsq::save_dataset(out / "dataset.json", data,
                     {{"session", panel.session},
                      {"subjects", panel.scores.subjects()}});
  info("wrote " + std::to_string(J) + " traces to " +
       (out / "dataset.json").string());
  return kOk;
}

// --------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::size_t order = 0;
  std::string config;
  std::string warm_start;
  bool strict = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const tvsq::TrainingDataset data = tvsq::load_dataset(a.data);
  const tvsq::TrainConfig config = load_config(a.config);
  std::optional<tvsq::HWParams> warm;
  if (!a.warm_start.empty()) warm = tvsq::load_model(a.warm_start);
  const tvsq::TrainReport report = tvsq::train(data, a.order, config, warm);
  for (const auto& s : report.history) {
    debug("nu=" + num(s.nu) + " objective=" + num(s.approx_objective) +
          " outage=" + num(s.outage) +
          " iterations=" + std::to_string(s.descent_iterations));
  }
  for (const auto& w : report.warnings) info("warning: " + w);
  const fs::path out(g.out_dir);
  tvsq::save_model(out / "model.json", report.theta_star);
  tvsq::write_json(out / "report.json", tvsq::report_json(report));
  std::cout << "order " << a.order << " training outage "
            << num(report.final_outage) << " spectral radius "
            << num(tvsq::spectral_radius(report.theta_star.f)) << '\n';
  if (a.strict && !report.warnings.empty()) return kNumerical;
  return kOk;
}

// ------------------------------------------------------------- predict

struct PredictArgs {
  std::string model;
  std::string input;
  std::string init = "hold";
};

int cmd_predict(const Globals& g, const PredictArgs& a) {
  const tvsq::HWParams params = tvsq::load_model(a.model);
  const tvsq::InitKind kind = parse_init(a.init);
  tvsq::Series stsq;
  tvsq::InitPolicy policy;
  if (kind == tvsq::InitKind::kPinned) {
    const tvsq::TraceRecord rec = tvsq::read_trace_csv(a.input);
    stsq = rec.stsq;
    policy = tvsq::pinned_init(rec.tvsq.values, params.gamma, params.order);
  } else {
    stsq = tvsq::read_stsq_csv(a.input);
    policy = kind == tvsq::InitKind::kZeroState
                 ? tvsq::InitPolicy::zero_state()
                 : tvsq::InitPolicy::hold_first_input();
  }
  const tvsq::PredictedTrace pred = tvsq::simulate(stsq, params, policy);
  const fs::path path = fs::path(g.out_dir) / "prediction.csv";
  tvsq::write_text(path, tvsq::prediction_csv(stsq, pred));
  info("wrote " + path.string());
  return kOk;
}

// --------------------------------------------------------------- order

struct OrderArgs {
  std::string data;
  std::string orders = "1-6";
  std::string config;
  bool no_train = false;
};

int cmd_order(const Globals& g, const OrderArgs& a) {
  const tvsq::TrainingDataset data = tvsq::load_dataset(a.data);
  const tvsq::OrderScan scan = tvsq::select_order(
      data, parse_orders(a.orders), load_config(a.config), !a.no_train);
  std::printf("%4s %14s %10s %14s\n", "r", "lipschitz", "outage",
              "description");
  for (const auto& c : scan.candidates) {
    std::printf("%4zu %14.6g %10s %14s%s\n", c.order, c.lipschitz,
                c.outage ? num(*c.outage).c_str() : "-",
                c.description_length ? num(*c.description_length).c_str()
                                     : "-",
                c.order == scan.selected ? "  *" : "");
  }
  tvsq::write_json(fs::path(g.out_dir) / "order_scan.json",
                   tvsq::to_json(scan));
  return kOk;
}

// ------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string model;
  double input_lo = 0.0;
  double input_hi = 100.0;
  std::size_t grid = 101;
};

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  const tvsq::HWParams params = tvsq::load_model(a.model);
  const tvsq::Interval input{a.input_lo, a.input_hi};
  const tvsq::StabilityReport report = tvsq::stability_report(params, input);
  const tvsq::Series qgrid = tvsq::linear_grid(a.input_lo, a.input_hi, a.grid);
  const tvsq::NonlinearityProfile profile =
      tvsq::nonlinearity_profile(params, qgrid);
  const fs::path out(g.out_dir);
  tvsq::Json j = tvsq::to_json(report);
  j["profiles"] = {{"input", tvsq::to_json(profile.input)},
                   {"output", tvsq::to_json(profile.output)}};
  tvsq::write_json(out / "stability.json", j);
  tvsq::write_text(out / "impulse.csv", tvsq::impulse_csv(report.impulse));
  tvsq::write_text(out / "input_profile.csv", tvsq::curve_csv(profile.input));
  tvsq::write_text(out / "output_profile.csv",
                   tvsq::curve_csv(profile.output));
  std::cout << "rho " << num(report.rho) << " tau " << num(report.tau)
            << " l1 " << num(report.l1_norm) << " peak lag "
            << report.peak_lag << '\n';
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string init = "pinned";
  bool baselines = false;
  bool folds_by_group = false;
  std::size_t order = 0;
  std::string config;
};

void print_metrics(const std::string& label, const tvsq::EvalMetrics& m) {
  std::cout << label << ": outage " << num(m.outage) << " pearson "
            << opt_num(m.pearson) << " spearman " << opt_num(m.spearman)
            << '\n';
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const tvsq::TrainingDataset data = tvsq::load_dataset(a.data);
  const tvsq::InitKind kind = parse_init(a.init);
  tvsq::Json j = {{"format", "tvsq-eval"}, {"version", tvsq::kFormatVersion}};
  std::size_t warmup = a.order;
  if (a.folds_by_group) {
    std::size_t r = a.order;
    if (r == 0 && !a.model.empty()) r = tvsq::load_model(a.model).order;
    if (r == 0) throw tvsq::ContractError("--folds-by-group needs -r or --model");
    warmup = r;
    const tvsq::CrossValidation cv =
        tvsq::cross_validate_by_group(data, r, load_config(a.config), kind);
    j["cross_validation"] = tvsq::to_json(cv);
    for (const auto& f : cv.folds) print_metrics("fold " + f.group, f.metrics);
    std::cout << "cross-validation mean outage " << num(cv.mean_outage)
              << " pearson " << opt_num(cv.mean_pearson) << " spearman "
              << opt_num(cv.mean_spearman) << '\n';
  } else {
    if (a.model.empty()) throw tvsq::ContractError("eval needs --model");
    const tvsq::HWParams params = tvsq::load_model(a.model);
    warmup = params.order;
    const tvsq::EvalMetrics m = tvsq::evaluate_model(params, data, kind);
    for (const auto& w : m.warnings) info("warning: " + w);
    j["model"] = tvsq::to_json(m);
    print_metrics("model", m);
  }
  if (a.baselines) {
    tvsq::Json b = tvsq::Json::object();
    for (tvsq::Pooling p : tvsq::kAllPoolings) {
      const tvsq::EvalMetrics m = tvsq::evaluate_pooling(data, p, warmup);
      b[tvsq::to_string(p)] = tvsq::to_json(m);
      print_metrics(std::string(tvsq::to_string(p)) + " pooling", m);
    }
    j["baselines"] = std::move(b);
  }
  tvsq::write_json(fs::path(g.out_dir) / "metrics.json", j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hammerstein-Wiener models of time-varying video quality"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--log-level", g.log_level, "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("-o,--out-dir", g.out_dir, "directory for output files");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "synthetic ground-truth dataset");
  c_gen->add_option("--spec", gen.spec, "ground-truth spec JSON")->required();
  c_gen->add_option("--seed", gen.seed, "override the spec's seed");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep", "subject scores to TVSQ traces");
  c_prep->add_option("--scores", prep.scores, "subject,video,t,score CSV")
      ->required();
  c_prep->add_option("--reference", prep.reference, "subject,t,score CSV")
      ->required();
  c_prep->add_option("--stsq", prep.stsq,
                     "video,t,stsq CSV; when given, writes a dataset");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "fit a model of order r");
  c_train->add_option("--data", tr.data, "dataset manifest")->required();
  c_train->add_option("-r,--order", tr.order, "model order")
      ->required()
      ->check(CLI::PositiveNumber);
  c_train->add_option("--config", tr.config, "training config JSON");
  c_train->add_option("--warm-start", tr.warm_start, "model or report JSON");
  c_train->add_flag("--strict", tr.strict,
                    "exit 2 when any line search stalled");

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "predict TVSQ from STSQ");
  c_pred->add_option("--model", pr.model, "model or report JSON")->required();
  c_pred->add_option("--input", pr.input, "CSV with an stsq column")
      ->required();
  c_pred->add_option("--init", pr.init,
                     "hold (first input), zero, or pinned (needs tvsq)")
      ->check(CLI::IsMember({"hold", "zero", "pinned"}));

  OrderArgs od;
  auto* c_order = app.add_subcommand("order", "scan model orders");
  c_order->add_option("--data", od.data, "dataset manifest")->required();
  c_order->add_option("--orders", od.orders, "e.g. 1-6 or 2,4,8");
  c_order->add_option("--config", od.config, "training config JSON");
  c_order->add_flag("--no-train", od.no_train,
                    "Lipschitz quotients only");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "stability and nonlinearities");
  c_an->add_option("--model", an.model, "model or report JSON")->required();
  c_an->add_option("--input-min", an.input_lo, "lowest input quality");
  c_an->add_option("--input-max", an.input_hi, "highest input quality");
  c_an->add_option("--grid", an.grid, "profile grid points")
      ->check(CLI::Range(2, 100000));

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "score a model on a dataset");
  c_eval->add_option("--model", ev.model, "model or report JSON");
  c_eval->add_option("--data", ev.data, "dataset manifest")->required();
  c_eval->add_option("--init", ev.init, "pinned, hold or zero")
      ->check(CLI::IsMember({"hold", "zero", "pinned"}));
  c_eval->add_flag("--baselines", ev.baselines,
                   "also score max/min/median/mean pooling");
  c_eval->add_flag("--folds-by-group", ev.folds_by_group,
                   "leave-one-group-out cross-validation");
  c_eval->add_option("-r,--order", ev.order, "order for cross-validation");
  c_eval->add_option("--config", ev.config, "training config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  g_log = g.log_level == "quiet"   ? LogLevel::kQuiet
          : g.log_level == "debug" ? LogLevel::kDebug
                                   : LogLevel::kInfo;

  try {
    if (*c_gen) return cmd_generate(g, gen);
    if (*c_prep) return cmd_prep(g, prep);
    if (*c_train) return cmd_train(g, tr);
    if (*c_pred) return cmd_predict(g, pr);
    if (*c_order) return cmd_order(g, od);
    if (*c_an) return cmd_analyze(g, an);
    if (*c_eval) return cmd_eval(g, ev);
  } catch (const tvsq::StabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const tvsq::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const tvsq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
