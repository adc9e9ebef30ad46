#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gmmot/barycenter.hpp"
#include "gmmot/dadil.hpp"
#include "gmmot/em.hpp"
#include "gmmot/io/json.hpp"
#include "gmmot/io/toy.hpp"

namespace gmmot::io {

/// Everything a pipeline run needs. The JSON form mirrors the structs field for field:
/// {"em": {...}, "barycenter": {...}, "dadil": {...}, "toy": {...}, "data", "sources", "target",
/// "output_dir"}. Missing keys keep their defaults; unknown keys are rejected.
struct RunConfig {
  EmConfig em{};
  BarycenterConfig barycenter{};
  DadilConfig dadil{};
  ToyConfig toy{};
  int k_per_class = 2;
  std::optional<std::filesystem::path> data;
  std::vector<std::filesystem::path> sources;
  std::optional<std::filesystem::path> target;
  std::filesystem::path output_dir = ".";

  /// Throws InvalidInput naming the first referenced input path that does not exist.
  void check_paths() const {
    auto need = [](const std::filesystem::path& p) {
      if (!std::filesystem::exists(p)) throw InvalidInput("path does not exist: " + p.string());
    };
    if (data) need(*data);
    for (const auto& s : sources) need(s);
    if (target) need(*target);
  }
};

namespace detail {

inline const char* init_name(BarycenterInit i) {
  return i == BarycenterInit::from_measure ? "from_measure" : "random_normal";
}

inline BarycenterInit init_from_name(const std::string& s) {
  if (s == "from_measure") return BarycenterInit::from_measure;
  if (s == "random_normal") return BarycenterInit::random_normal;
  throw ParseError(0, "unknown barycenter init '" + s + "'");
}

inline Json barycenter_json(const BarycenterConfig& b) {
  Json j;
  j["n_components"] = b.n_components;
  j["beta"] = b.beta;
  j["tol"] = b.tol;
  j["max_iter"] = b.max_iter;
  j["seed"] = b.seed;
  j["init"] = init_name(b.init);
  j["init_index"] = b.init_index;
  j["s_min"] = b.s_min;
  j["threads"] = b.threads;
  return j;
}

/// Reads `key` into `dst` when present, recording it as seen.
template <class T>
void read_key(const Json& j, const char* key, T& dst, std::set<std::string>& seen) {
  if (!j.contains(key)) return;
  seen.insert(key);
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(0, std::string("config field '") + key + "' has the wrong type");
  }
}

inline void reject_unknown(const Json& j, const std::set<std::string>& seen, const std::string& section) {
  if (!j.is_object()) throw ParseError(0, "config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!seen.count(it.key())) throw ParseError(0, "unknown config key '" + section + it.key() + "'");
}

inline void barycenter_from(const Json& j, BarycenterConfig& b, const std::string& section) {
  std::set<std::string> seen;
  read_key(j, "n_components", b.n_components, seen);
  read_key(j, "beta", b.beta, seen);
  read_key(j, "tol", b.tol, seen);
  read_key(j, "max_iter", b.max_iter, seen);
  read_key(j, "seed", b.seed, seen);
  std::string init = init_name(b.init);
  read_key(j, "init", init, seen);
  b.init = init_from_name(init);
  read_key(j, "init_index", b.init_index, seen);
  read_key(j, "s_min", b.s_min, seen);
  read_key(j, "threads", b.threads, seen);
  reject_unknown(j, seen, section);
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline Json to_json(const RunConfig& c) {
  Json j;
  Json em;
  em["n_components"] = c.em.n_components;
  em["max_iter"] = c.em.max_iter;
  em["tol"] = c.em.tol;
  em["s_min"] = c.em.s_min;
  em["seed"] = c.em.seed;
  j["em"] = std::move(em);
  j["k_per_class"] = c.k_per_class;
  j["barycenter"] = detail::barycenter_json(c.barycenter);

  const auto& d = c.dadil;
  Json dj;
  dj["n_atoms"] = d.n_atoms;
  dj["k_atom"] = d.k_atom;
  dj["eta"] = d.eta;
  dj["n_iter"] = d.n_iter;
  dj["beta"] = d.beta;
  dj["inner_tol"] = d.inner_tol;
  dj["inner_max_iter"] = d.inner_max_iter;
  dj["s_min"] = d.s_min;
  dj["seed"] = d.seed;
  dj["optimizer"] = d.optimizer == OptimizerKind::adam ? "adam" : "sgd";
  dj["adam"] = Json{{"beta1", d.adam.beta1}, {"beta2", d.adam.beta2}, {"eps", d.adam.eps}};
  dj["threads"] = d.threads;
  dj["record_coords"] = d.record_coords;
  dj["reconstruction"] = detail::barycenter_json(d.reconstruction);
  j["dadil"] = std::move(dj);

  const auto& t = c.toy;
  Json tj;
  tj["n_domains"] = t.n_domains;
  tj["n_classes"] = t.n_classes;
  tj["n_per_class"] = t.n_per_class;
  tj["d"] = t.d;
  tj["shift_step"] = detail::to_std(t.shift_step);
  tj["rot_step"] = t.rot_step;
  tj["class_radius"] = t.class_radius;
  tj["cluster_std"] = detail::to_std(t.cluster_std);
  tj["seed"] = t.seed;
  j["toy"] = std::move(tj);

  j["data"] = c.data ? Json(c.data->string()) : Json(nullptr);
  Json src = Json::array();
  for (const auto& s : c.sources) src.push_back(s.string());
  j["sources"] = std::move(src);
  j["target"] = c.target ? Json(c.target->string()) : Json(nullptr);
  j["output_dir"] = c.output_dir.string();
  return j;
}

/// Overlays the keys present in `j` onto `base`.
inline RunConfig run_config_from_json(const Json& j, RunConfig base = {}) {
  if (!j.is_object()) throw ParseError(0, "run config must be a JSON object");
  std::set<std::string> top;
  RunConfig c = std::move(base);

  if (j.contains("em")) {
    top.insert("em");
    const auto& e = j.at("em");
    std::set<std::string> seen;
    detail::read_key(e, "n_components", c.em.n_components, seen);
    detail::read_key(e, "max_iter", c.em.max_iter, seen);
    detail::read_key(e, "tol", c.em.tol, seen);
    detail::read_key(e, "s_min", c.em.s_min, seen);
    detail::read_key(e, "seed", c.em.seed, seen);
    detail::reject_unknown(e, seen, "em.");
  }
  detail::read_key(j, "k_per_class", c.k_per_class, top);
  if (j.contains("barycenter")) {
    top.insert("barycenter");
    detail::barycenter_from(j.at("barycenter"), c.barycenter, "barycenter.");
  }
  if (j.contains("dadil")) {
    top.insert("dadil");
    const auto& dj = j.at("dadil");
    auto& d = c.dadil;
    std::set<std::string> seen;
    detail::read_key(dj, "n_atoms", d.n_atoms, seen);
    detail::read_key(dj, "k_atom", d.k_atom, seen);
    detail::read_key(dj, "eta", d.eta, seen);
    detail::read_key(dj, "n_iter", d.n_iter, seen);
    detail::read_key(dj, "beta", d.beta, seen);
    detail::read_key(dj, "inner_tol", d.inner_tol, seen);
    detail::read_key(dj, "inner_max_iter", d.inner_max_iter, seen);
    detail::read_key(dj, "s_min", d.s_min, seen);
    detail::read_key(dj, "seed", d.seed, seen);
    std::string opt = d.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    detail::read_key(dj, "optimizer", opt, seen);
    if (opt != "adam" && opt != "sgd") throw ParseError(0, "unknown optimizer '" + opt + "'");
    d.optimizer = opt == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    if (dj.contains("adam")) {
      seen.insert("adam");
      std::set<std::string> as;
      detail::read_key(dj.at("adam"), "beta1", d.adam.beta1, as);
      detail::read_key(dj.at("adam"), "beta2", d.adam.beta2, as);
      detail::read_key(dj.at("adam"), "eps", d.adam.eps, as);
      detail::reject_unknown(dj.at("adam"), as, "dadil.adam.");
    }
    detail::read_key(dj, "threads", d.threads, seen);
    detail::read_key(dj, "record_coords", d.record_coords, seen);
    if (dj.contains("reconstruction")) {
      seen.insert("reconstruction");
      detail::barycenter_from(dj.at("reconstruction"), d.reconstruction, "dadil.reconstruction.");
    }
    detail::reject_unknown(dj, seen, "dadil.");
  }
  if (j.contains("toy")) {
    top.insert("toy");
    const auto& tj = j.at("toy");
    auto& t = c.toy;
    std::set<std::string> seen;
    detail::read_key(tj, "n_domains", t.n_domains, seen);
    detail::read_key(tj, "n_classes", t.n_classes, seen);
    detail::read_key(tj, "n_per_class", t.n_per_class, seen);
    detail::read_key(tj, "d", t.d, seen);
    std::vector<double> shift = detail::to_std(t.shift_step), cstd = detail::to_std(t.cluster_std);
    detail::read_key(tj, "shift_step", shift, seen);
    detail::read_key(tj, "cluster_std", cstd, seen);
    t.shift_step = detail::from_std(shift);
    t.cluster_std = detail::from_std(cstd);
    detail::read_key(tj, "rot_step", t.rot_step, seen);
    detail::read_key(tj, "class_radius", t.class_radius, seen);
    detail::read_key(tj, "seed", t.seed, seen);
    detail::reject_unknown(tj, seen, "toy.");
  }
  auto opt_path = [&](const char* key, std::optional<std::filesystem::path>& dst) {
    if (!j.contains(key)) return;
    top.insert(key);
    if (j.at(key).is_null()) {
      dst.reset();
    } else if (j.at(key).is_string()) {
      dst = j.at(key).get<std::string>();
    } else {
      throw ParseError(0, std::string("config field '") + key + "' must be a path or null");
    }
  };
  opt_path("data", c.data);
  opt_path("target", c.target);
  if (j.contains("sources")) {
    top.insert("sources");
    std::vector<std::string> s;
    std::set<std::string> dummy;
    detail::read_key(j, "sources", s, dummy);
    c.sources.assign(s.begin(), s.end());
  }
  if (j.contains("output_dir")) {
    std::string o;
    detail::read_key(j, "output_dir", o, top);
    c.output_dir = o;
  }
  detail::reject_unknown(j, top, "");
  return c;
}

/// Loads a run config file and checks that every input path it names exists.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c = run_config_from_json(load_json(path));
  c.check_paths();
  return c;
}

}  // namespace gmmot::io
