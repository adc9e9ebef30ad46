#pragma once

// Command-line front end. Kept in a header so the test suite can drive `run` in-process.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmmot/barycenter.hpp"
#include "gmmot/dadil.hpp"
#include "gmmot/density.hpp"
#include "gmmot/em.hpp"
#include "gmmot/io/csv.hpp"
#include "gmmot/io/json.hpp"
#include "gmmot/io/run_config.hpp"
#include "gmmot/io/toy.hpp"
#include "gmmot/mixture_ot.hpp"
#include "gmmot/version.hpp"
#include "gmmot/wbt.hpp"

namespace gmmot::cli {

namespace fs = std::filesystem;

/// Raw flag values. Optional fields stay empty unless given on the command line, so that a
/// --config file can supply them.
struct Flags {
  std::string config;
  std::string data, out, a, b, model, target, sources, lambda;
  std::string mode = "map";
  std::optional<Seed> seed;
  std::optional<int> k, k_per_class, atoms, iters, threads, n;
  std::optional<double> beta, eta, tol, s_min;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

/// Manifest next to a file output: out.json -> out.manifest.json.
inline fs::path manifest_beside(const fs::path& file) {
  fs::path m = file;
  m.replace_extension(".manifest.json");
  return m;
}

/// One domain as given on the command line: a fitted mixture plus the raw samples when the
/// input was a CSV file.
struct Domain {
  GaussianMixture gmm;
  std::optional<LabeledDataset> samples;
};

inline Domain load_source(const fs::path& p, const io::RunConfig& rc) {
  if (has_ext(p, ".json")) {
    auto g = io::load_gmm(p);
    if (!g.labeled()) throw InvalidState("source mixture " + p.string() + " has no labels");
    return {std::move(g), std::nullopt};
  }
  auto ds = io::load_csv(p);
  if (!ds.labels) throw InvalidInput("source dataset " + p.string() + " has no labels");
  auto g = fit_labeled(ds, rc.k_per_class, rc.em);
  return {std::move(g), std::move(ds)};
}

inline Domain load_target(const fs::path& p, const io::RunConfig& rc) {
  if (has_ext(p, ".json")) return {io::load_gmm(p).unlabeled(), std::nullopt};
  auto ds = io::load_csv(p);
  auto g = em_fit(ds.features, rc.em);
  return {std::move(g), std::move(ds)};
}

/// domain0.csv, domain1.csv, ... in numeric order.
inline std::vector<fs::path> toy_domains(const fs::path& dir) {
  std::vector<fs::path> out;
  for (int l = 0;; ++l) {
    const fs::path p = dir / ("domain" + std::to_string(l) + ".csv");
    if (!fs::exists(p)) break;
    out.push_back(p);
  }
  if (out.size() < 2) throw InvalidInput(dir.string() + " holds fewer than two domainN.csv files");
  return out;
}

}  // namespace detail

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Gaussian-mixture optimal transport toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    Flags f;
    register_commands(app, f);
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      // --help and --version exit 0; every other parse failure is a usage error
      const int code = app.exit(e, out_, err_);
      return code == 0 ? 0 : 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
      dispatch(cmd, f);
      return 0;
    } catch (const InfeasibleMarginals& e) {
      err_ << "error [transport]: " << e.what() << "\n";
      return 2;
    } catch (const NumericalFailure& e) {
      err_ << "error [" << e.stage() << "]: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return 1;
    }
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::vector<std::string> outputs_;

  static void common(CLI::App* c, Flags& f) {
    c->add_option("--config", f.config, "Run config JSON; explicit flags override it")->check(CLI::ExistingFile);
    c->add_option("--seed", f.seed, "Master seed (default 0)");
  }

  static void register_commands(CLI::App& app, Flags& f) {
    auto* fit = app.add_subcommand("fit-gmm", "Fit a mixture to a CSV dataset with EM");
    common(fit, f);
    fit->add_option("--data", f.data, "Input CSV")->required();
    fit->add_option("--out", f.out, "Output mixture JSON")->required();
    fit->add_option("--k", f.k, "Components (whole dataset, or per class with --k-per-class)");
    fit->add_option("--k-per-class", f.k_per_class, "Fit each class separately with this many components");
    fit->add_option("--iters", f.iters, "EM iteration cap");
    fit->add_option("--tol", f.tol, "EM tolerance on mean log-likelihood");
    fit->add_option("--s-min", f.s_min, "Standard deviation floor");

    auto* plan = app.add_subcommand("gmmot", "Optimal component coupling between two mixtures");
    common(plan, f);
    plan->add_option("--a", f.a, "Source mixture JSON")->required();
    plan->add_option("--b", f.b, "Target mixture JSON")->required();
    plan->add_option("--beta", f.beta, "Label weight (0 ignores labels)");
    plan->add_option("--out", f.out, "Plan JSON");

    auto* mw = app.add_subcommand("mw2", "Print the squared mixture Wasserstein distance");
    common(mw, f);
    mw->add_option("--a", f.a, "First mixture JSON")->required();
    mw->add_option("--b", f.b, "Second mixture JSON")->required();
    mw->add_option("--beta", f.beta, "Label weight (0 ignores labels)");
    mw->add_option("--out", f.out, "Result JSON");

    auto* bary = app.add_subcommand("barycenter", "Fixed-point barycenter of mixtures");
    common(bary, f);
    bary->add_option("--sources", f.sources, "Comma-separated mixture JSON files")->required();
    bary->add_option("--lambda", f.lambda, "Comma-separated barycentric weights (default uniform)");
    bary->add_option("--k", f.k, "Barycenter components (default: first measure's)");
    bary->add_option("--beta", f.beta, "Label weight; 0 gives the unlabeled barycenter");
    bary->add_option("--iters", f.iters, "Iteration cap");
    bary->add_option("--tol", f.tol, "Stop when the loss changes by less than this");
    bary->add_option("--s-min", f.s_min, "Standard deviation floor");
    bary->add_option("--threads", f.threads, "Worker threads");
    bary->add_option("--out", f.out, "Output directory")->required();

    for (const char* name : {"wbt", "dadil"}) {
      const bool dl = std::string(name) == "dadil";
      auto* c = app.add_subcommand(name, dl ? "Dataset dictionary learning over mixtures"
                                            : "Barycenter-then-transport adaptation");
      common(c, f);
      c->add_option("--data", f.data, "Directory of domainN.csv files; the last is the target");
      c->add_option("--sources", f.sources, "Comma-separated labeled CSV or mixture JSON files");
      c->add_option("--target", f.target, "Target CSV or mixture JSON (labels, if any, are only used for scoring)");
      c->add_option("--k", f.k, "Components of the target mixture when fitting from CSV");
      c->add_option("--k-per-class", f.k_per_class, "Per-class components of source mixtures fitted from CSV");
      c->add_option("--beta", f.beta, "Label weight");
      c->add_option("--tol", f.tol, "Barycenter tolerance");
      c->add_option("--s-min", f.s_min, "Standard deviation floor");
      c->add_option("--threads", f.threads, "Worker threads");
      c->add_option("--out", f.out, "Output directory")->required();
      if (dl) {
        c->add_option("--atoms", f.atoms, "Dictionary atoms (default: sources + 1)");
        c->add_option("--eta", f.eta, "Learning rate");
        c->add_option("--iters", f.iters, "Outer iterations");
      } else {
        c->add_option("--iters", f.iters, "Barycenter iteration cap");
      }
    }

    auto* cls = app.add_subcommand("classify", "MAP labels from a mixture, or sample export");
    common(cls, f);
    cls->add_option("--model", f.model, "Labeled mixture JSON")->required();
    cls->add_option("--mode", f.mode, "map: label --data rows; sample: draw --n labeled points")
        ->check(CLI::IsMember({"map", "sample"}));
    cls->add_option("--data", f.data, "CSV to classify (map mode)");
    cls->add_option("--n", f.n, "Number of samples (sample mode, default 1000)");
    cls->add_option("--out", f.out, "Output CSV")->required();

    auto* toy = app.add_subcommand("toy-gen", "Write the shifted-and-rotated toy domains");
    common(toy, f);
    toy->add_option("--out", f.out, "Output directory")->required();
  }

  /// Defaults, then the --config file, then explicit flags.
  io::RunConfig resolve(const Flags& f, const std::string& cmd) const {
    io::RunConfig rc;
    if (cmd == "fit-gmm" || cmd == "wbt" || cmd == "dadil") rc.em.n_components = 6;
    if (!f.config.empty()) rc = io::load_run_config(f.config);
    if (f.seed) {
      rc.em.seed = *f.seed;
      rc.barycenter.seed = *f.seed;
      rc.dadil.seed = *f.seed;
      rc.toy.seed = *f.seed;
    }
    if (f.k) {
      rc.em.n_components = *f.k;
      if (cmd == "barycenter") rc.barycenter.n_components = *f.k;
    }
    if (f.k_per_class) rc.k_per_class = *f.k_per_class;
    if (f.beta) {
      rc.barycenter.beta = *f.beta;
      rc.dadil.beta = *f.beta;
    }
    if (f.atoms) rc.dadil.n_atoms = *f.atoms;
    if (f.eta) rc.dadil.eta = *f.eta;
    if (f.iters) {
      if (cmd == "fit-gmm") rc.em.max_iter = *f.iters;
      if (cmd == "barycenter" || cmd == "wbt") rc.barycenter.max_iter = *f.iters;
      if (cmd == "dadil") rc.dadil.n_iter = *f.iters;
    }
    if (f.tol) {
      if (cmd == "fit-gmm") rc.em.tol = *f.tol;
      rc.barycenter.tol = *f.tol;
      rc.dadil.inner_tol = *f.tol;
    }
    if (f.s_min) {
      rc.em.s_min = *f.s_min;
      rc.barycenter.s_min = *f.s_min;
      rc.dadil.s_min = *f.s_min;
    }
    if (f.threads) {
      rc.barycenter.threads = *f.threads;
      rc.dadil.threads = *f.threads;
    }
    if (!f.data.empty()) rc.data = f.data;
    if (!f.sources.empty()) {
      rc.sources.clear();
      for (const auto& s : detail::split_list(f.sources)) rc.sources.emplace_back(s);
    }
    if (!f.target.empty()) rc.target = f.target;
    if (!f.out.empty()) rc.output_dir = f.out;
    rc.check_paths();
    return rc;
  }

  void save(const io::Json& j, const fs::path& p) {
    io::save_json(j, p);
    outputs_.push_back(p.string());
  }

  void write_manifest(const std::string& cmd, const io::RunConfig& rc, const Flags& f, const fs::path& path) {
    io::Json m;
    m["command"] = cmd;
    m["resolved_config"] = io::to_json(rc);
    m["seed"] = f.seed.value_or(rc.dadil.seed);
    m["version"] = kVersion;
    io::Json outs = io::Json::array();
    for (const auto& o : outputs_) outs.push_back(o);
    m["outputs"] = std::move(outs);
    m["timestamp"] = detail::utc_timestamp();
    io::save_json(m, path);
  }

  void dispatch(const std::string& cmd, const Flags& f) {
    const io::RunConfig rc = resolve(f, cmd);
    if (cmd == "fit-gmm") return fit_gmm(rc, f);
    if (cmd == "gmmot" || cmd == "mw2") return distance(cmd, rc, f);
    if (cmd == "barycenter") return barycenter(rc, f);
    if (cmd == "wbt" || cmd == "dadil") return adapt(cmd, rc, f);
    if (cmd == "classify") return classify(rc, f);
    if (cmd == "toy-gen") return toy_gen(rc, f);
    throw InvalidInput("unknown command " + cmd);
  }

  void fit_gmm(const io::RunConfig& rc, const Flags& f) {
    const auto ds = io::load_csv(*rc.data);
    GaussianMixture g;
    if (f.k_per_class) {
      if (!ds.labels) throw InvalidInput("--k-per-class needs a labeled dataset");
      g = fit_labeled(ds, rc.k_per_class, rc.em);
    } else {
      g = em_fit(ds.features, rc.em);
    }
    const fs::path out = f.out;
    save(io::to_json(g), out);
    out_ << "fitted " << g.size() << " components, mean log-likelihood "
         << io::detail::format_double(mean_log_likelihood(g, ds.features)) << "\n";
    write_manifest("fit-gmm", rc, f, detail::manifest_beside(out));
  }

  void distance(const std::string& cmd, const io::RunConfig& rc, const Flags& f) {
    const auto a = io::load_gmm(f.a), b = io::load_gmm(f.b);
    const double beta = f.beta.value_or(0.0);
    const TransportPlan plan = beta > 0.0 ? smw_plan(a, b, beta) : gmmot::gmmot(a, b);
    out_ << io::detail::format_double(plan.objective) << "\n";
    if (f.out.empty()) return;
    const fs::path out = f.out;
    if (cmd == "gmmot") {
      save(io::to_json(plan), out);
    } else {
      save(io::Json{{"mw2_sq", plan.objective}, {"beta", beta}}, out);
    }
    write_manifest(cmd, rc, f, detail::manifest_beside(out));
  }

  void barycenter(const io::RunConfig& rc, const Flags& f) {
    if (rc.sources.empty()) throw InvalidInput("--sources is empty");
    std::vector<GaussianMixture> ms;
    for (const auto& p : rc.sources) ms.push_back(io::load_gmm(p));
    Vector lambda = Vector::Constant(static_cast<Eigen::Index>(ms.size()), 1.0 / static_cast<double>(ms.size()));
    if (!f.lambda.empty()) {
      const auto parts = detail::split_list(f.lambda);
      lambda.resize(static_cast<Eigen::Index>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i) lambda[static_cast<Eigen::Index>(i)] = std::stod(parts[i]);
    }
    const bool labeled = rc.barycenter.beta > 0.0 &&
                         std::all_of(ms.begin(), ms.end(), [](const GaussianMixture& g) { return g.labeled(); });
    const auto res = labeled ? smw_barycenter(ms, lambda, rc.barycenter) : mw_barycenter(ms, lambda, rc.barycenter);
    const fs::path dir = rc.output_dir;
    save(io::to_json(res.barycenter), dir / "barycenter.json");
    save(io::trace_json(res.trace.losses), dir / "loss_trace.json");
    out_ << "barycenter loss " << io::detail::format_double(res.trace.losses.back()) << " after "
         << res.trace.iterations_run << " iterations\n";
    write_manifest("barycenter", rc, f, dir / "manifest.json");
  }

  void adapt(const std::string& cmd, io::RunConfig rc, const Flags& f) {
    std::vector<fs::path> src_paths = rc.sources;
    std::optional<fs::path> tgt_path = rc.target;
    if (rc.data && fs::is_directory(*rc.data)) {
      auto doms = detail::toy_domains(*rc.data);
      if (src_paths.empty()) src_paths.assign(doms.begin(), doms.end() - 1);
      if (!tgt_path) tgt_path = doms.back();
    }
    if (src_paths.empty() || !tgt_path) throw InvalidInput("give --sources and --target, or --data DIR");
    rc.sources = src_paths;
    rc.target = tgt_path;

    std::vector<GaussianMixture> sources;
    for (const auto& p : src_paths) sources.push_back(detail::load_source(p, rc).gmm);
    const auto target = detail::load_target(*tgt_path, rc);

    const fs::path dir = rc.output_dir;
    AdaptationResult ad;
    if (cmd == "wbt") {
      ad = gmm_wbt(sources, target.gmm, WbtConfig{rc.barycenter});
    } else {
      auto res = dadil_fit(sources, target.gmm, rc.dadil);
      save(io::to_json(res.dictionary), dir / "dictionary.json");
      save(io::coords_trace_json(res.adaptation.coords_trace), dir / "coords_trace.json");
      ad = std::move(res.adaptation);
    }
    save(io::to_json(ad.target_gmm), dir / "target_gmm.json");
    save(io::trace_json(ad.loss_trace), dir / "loss_trace.json");

    io::Json metrics;
    metrics["final_loss"] = ad.loss_trace.empty() ? 0.0 : ad.loss_trace.back();
    if (target.samples && target.samples->labels) {
      const double acc = accuracy(ad.target_gmm, *target.samples);
      metrics["target_accuracy"] = acc;
      out_ << "target accuracy " << io::detail::format_double(acc) << "\n";
    } else {
      metrics["target_accuracy"] = nullptr;
      out_ << "target has no labels; accuracy not computed\n";
    }
    save(metrics, dir / "metrics.json");
    write_manifest(cmd, rc, f, dir / "manifest.json");
  }

  void classify(const io::RunConfig& rc, const Flags& f) {
    const auto g = io::load_gmm(f.model);
    const fs::path out = f.out;
    if (f.mode == "sample") {
      const auto s = sample(g, f.n.value_or(1000), split_seed(f.seed.value_or(0), stream::sample));
      const auto ds = s.as_dataset(g.labeled() ? static_cast<int>(g.n_classes()) : 0);
      io::save_csv(ds, out);
      outputs_.push_back(out.string());
      out_ << "wrote " << ds.size() << " samples\n";
    } else {
      if (!rc.data) throw InvalidInput("map mode needs --data");
      const auto ds = io::load_csv(*rc.data);
      LabeledDataset pred{ds.features, map_classify_all(g, ds.features), static_cast<int>(g.n_classes())};
      io::save_csv(pred, out);
      outputs_.push_back(out.string());
      if (ds.labels)
        out_ << "accuracy " << io::detail::format_double(accuracy(*pred.labels, *ds.labels)) << "\n";
      else
        out_ << "labeled " << ds.size() << " rows\n";
    }
    write_manifest("classify", rc, f, detail::manifest_beside(out));
  }

  void toy_gen(const io::RunConfig& rc, const Flags& f) {
    const auto doms = io::make_toy(rc.toy);
    const fs::path dir = rc.output_dir;
    for (std::size_t l = 0; l < doms.size(); ++l) {
      const fs::path p = dir / ("domain" + std::to_string(l) + ".csv");
      io::save_csv(doms[l], p);
      outputs_.push_back(p.string());
    }
    out_ << "wrote " << doms.size() << " domains to " << dir.string() << "\n";
    write_manifest("toy-gen", rc, f, dir / "manifest.json");
  }
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(out, err).run(argc, argv);
}

}  // namespace gmmot::cli
