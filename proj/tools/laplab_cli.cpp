// laplab: graph-Laplacian experiments on piecewise-smooth geometries.
// Subcommands mirror the experiment suite: sample, apply, predict, oracle,
// scaling, detect, spectra, compare, bound. Exit codes: 0 success,
// 2 validation error, 3 numerical failure.

#include "laplab/expr.hpp"
#include "laplab/io.hpp"
#include "laplab/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <numbers>

namespace {

using namespace laplab;

struct CommonArgs {
  std::string builtin;
  std::vector<std::string> params;
  std::string cloud_path;
  std::string field = "const:1";
  double t = 1e-3;
  int d = -1;
  int n = 1000;
  std::string mode = "grid";
  std::uint64_t seed = 0;
  double truncation = 8.0;
  std::string out;
  std::string manifest;
  int threads = 0;
  bool dry_run = false;
};

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--param expects key=value, got: " + s);
    std::string key = s.substr(0, eq);
    std::string val = s.substr(eq + 1);
    if (val == "pi/2") out[key] = std::numbers::pi / 2;
    else if (val == "pi/3") out[key] = std::numbers::pi / 3;
    else if (val == "pi/4") out[key] = std::numbers::pi / 4;
    else if (val == "3pi/4") out[key] = 3 * std::numbers::pi / 4;
    else out[key] = std::stod(val);
  }
  return out;
}

Vec parse_point(const std::string& s) {
  std::vector<double> vals;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) vals.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  Vec v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

std::vector<double> parse_tgrid(const std::string& spec) {
  // from:to:count, log-spaced, emitted strictly decreasing.
  auto c1 = spec.find(':');
  auto c2 = spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw std::invalid_argument("--tgrid expects from:to:count");
  double a = std::stod(spec.substr(0, c1));
  double b = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  int count = std::stoi(spec.substr(c2 + 1));
  if (count < 2 || !(a > 0) || !(b > 0))
    throw std::invalid_argument("--tgrid needs positive endpoints, count >= 2");
  double hi = std::max(a, b), lo = std::min(a, b);
  std::vector<double> grid;
  for (int i = 0; i < count; ++i)
    grid.push_back(hi * std::pow(lo / hi, double(i) / (count - 1)));
  return grid;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

json resolved_config(const std::string& sub, const CommonArgs& a, json extra,
                     const std::vector<std::string>& argv) {
  json j;
  j["subcommand"] = sub;
  j["builtin"] = a.builtin;
  j["builtin_params"] = a.params;
  j["cloud"] = a.cloud_path;
  j["field"] = a.field;
  j["t"] = a.t;
  j["d"] = a.d;
  j["n"] = a.n;
  j["mode"] = a.mode;
  j["seed"] = a.seed;
  j["truncation"] = a.truncation;
  j["out"] = a.out;
  j["threads"] = resolve_threads(a.threads);
  j["extra"] = std::move(extra);
  j["argv"] = argv;
  return j;
}

void write_manifest(const json& config, const CommonArgs& a) {
  std::string path = a.manifest.empty()
                         ? (a.out.empty() ? "laplab_run" : a.out) + ".manifest.json"
                         : a.manifest;
  write_json(config, path);
}

SingularManifold load_manifold(const CommonArgs& a) {
  if (a.builtin.empty())
    throw std::invalid_argument("this subcommand needs --builtin");
  return build_builtin(a.builtin, parse_params(a.params));
}

AnnotatedCloud load_or_sample(const CommonArgs& a, const SingularManifold* m,
                              double horizon) {
  if (!a.cloud_path.empty()) return read_external_csv(a.cloud_path, a.d);
  if (!m) throw std::invalid_argument("need --builtin or --cloud");
  SampleMode mode = a.mode == "iid" ? SampleMode::Iid : SampleMode::Grid;
  return sample(*m, a.n, mode, a.seed, horizon);
}

LaplacianConfig make_config(const CommonArgs& a, const SingularManifold* m) {
  LaplacianConfig cfg;
  cfg.t = a.t;
  cfg.d = m ? m->intrinsic_dim() : a.d;
  cfg.truncation_radius = a.truncation;
  if (cfg.d <= 0)
    throw std::invalid_argument("external clouds must declare --d");
  cfg.validate();
  return cfg;
}

int pick_representative(const AnnotatedCloud& cloud, const std::string& what) {
  int best = -1;
  if (what == "interior") {
    double r = -1;
    for (int i = 0; i < cloud.size(); ++i)
      if (cloud.annotations[i].r_ambient > r) {
        r = cloud.annotations[i].r_ambient;
        best = i;
      }
    return best;
  }
  SingKind kind = sing_kind_from_string(what);
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cloud.size(); ++i) {
    const auto& ann = cloud.annotations[i];
    if (ann.kind != kind) continue;
    // The crossing profile vanishes on the locus itself; approach it.
    if (kind == SingKind::Intersection && ann.r_ambient == 0.0) continue;
    // Strictly-less keeps the lowest index among distance ties, and the
    // epsilon collapses one-ulp asymmetries between mirror lattice sites.
    if (ann.r_ambient < r * (1.0 - 1e-9)) {
      r = ann.r_ambient;
      best = i;
    }
  }
  if (best < 0)
    throw std::invalid_argument("no cloud point near a " + what + " singularity");
  return best;
}

// --------------------------------------------------------------------------

int run_sample(const CommonArgs& a, double horizon, bool json_mirror,
               const json& config) {
  SingularManifold m = load_manifold(a);
  SampleMode mode = a.mode == "iid" ? SampleMode::Iid : SampleMode::Grid;
  AnnotatedCloud cloud = sample(m, a.n, mode, a.seed, horizon);
  if (a.out.empty()) throw std::invalid_argument("sample needs --out");
  write_cloud_csv(cloud, a.out);
  if (json_mirror) write_json(cloud_to_json(cloud), a.out + ".json");
  write_manifest(config, a);
  std::cout << json{{"written", a.out}, {"count", cloud.size()}}.dump() << "\n";
  return 0;
}

int run_apply(const CommonArgs& a, const std::string& indices, const json& config) {
  SingularManifold m_store;
  SingularManifold* m = nullptr;
  if (!a.builtin.empty()) {
    m_store = load_manifold(a);
    m = &m_store;
  }
  AnnotatedCloud cloud = load_or_sample(a, m, 10 * std::sqrt(a.t));
  LaplacianConfig cfg = make_config(a, m);
  ScalarField field = m ? make_field(a.field, *m)
                        : expression_field(
                              a.field.rfind("expr:", 0) == 0 ? a.field.substr(5)
                                                             : a.field,
                              cloud.ambient_dim);
  std::vector<Query> queries;
  if (indices.empty()) {
    for (int i = 0; i < cloud.size(); ++i) queries.push_back(i);
  } else {
    for (auto& tok : split_on(indices, ',')) queries.push_back(std::stoi(tok));
  }
  std::vector<double> lvals = apply_laplacian(cfg, cloud, field, queries, a.threads);
  std::vector<double> fvals;
  for (const auto& q : queries) {
    int i = std::get<int>(q);
    fvals.push_back(field.value(cloud.piece_of[i], cloud.point(i)));
  }
  if (!a.out.empty()) write_apply_csv(fvals, lvals, a.out);
  write_manifest(config, a);
  double mx = 0;
  for (double v : lvals) mx = std::max(mx, std::abs(v));
  std::cout << json{{"queries", queries.size()}, {"max_abs", mx}}.dump() << "\n";
  return 0;
}

int run_predict(const CommonArgs& a, const std::string& point_spec, int piece,
                bool with_empirical, int resolution, const json& config) {
  SingularManifold m = load_manifold(a);
  ScalarField field = make_field(a.field, m);
  Vec x = parse_point(point_spec);
  std::optional<double> empirical;
  if (with_empirical) {
    AnnotatedCloud cloud = load_or_sample(a, &m, 10 * std::sqrt(a.t));
    LaplacianConfig cfg = make_config(a, &m);
    ExternalQuery q{x, piece, field.value(piece, x)};
    empirical = apply_laplacian(cfg, cloud, field, {Query(q)}, a.threads)[0];
    if (!cloud.annotations.empty()) {
      Annotation ann = annotate(m, x, piece, 10 * std::sqrt(a.t));
      if (!ann.regular) *empirical *= std::sqrt(a.t);
    }
  }
  PredictionReport rep = predict_at(m, field, x, piece, a.t, resolution, empirical);
  json j = prediction_to_json(rep);
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_oracle(const CommonArgs& a, const std::string& point_spec, int piece,
               int resolution, const json& config) {
  SingularManifold m = load_manifold(a);
  ScalarField field = make_field(a.field, m);
  Vec x = parse_point(point_spec);
  double v = quadrature_Lt(m, field, x, piece, a.t, resolution, a.threads);
  json j{{"value", v}, {"t", a.t}, {"resolution", resolution}};
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  std::cout << j.dump() << "\n";
  return 0;
}

int run_scaling(const CommonArgs& a, const std::string& points,
                const std::string& tgrid_spec, const json& config) {
  SingularManifold m = load_manifold(a);
  ScalarField field = make_field(a.field, m);
  std::vector<double> grid = parse_tgrid(tgrid_spec);
  SampleMode mode = a.mode == "iid" ? SampleMode::Iid : SampleMode::Grid;
  AnnotatedCloud cloud = sample(m, a.n, mode, a.seed);
  LaplacianConfig base = make_config(a, &m);

  json rows = json::array();
  for (auto& what : split_on(points, ',')) {
    int idx = pick_representative(cloud, what);
    ScalingFit fit = scaling_fit(cloud, field, base, idx, grid, a.threads);
    json row = scaling_to_json(fit);
    row["kind"] = what;
    rows.push_back(row);
    if (!a.out.empty()) write_scaling_csv(fit, a.out + "." + what + ".csv");
  }
  json j{{"fits", rows}};
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_detect(const CommonArgs& a, double q, double margin, const json& config) {
  SingularManifold m_store;
  SingularManifold* m = nullptr;
  if (!a.builtin.empty()) {
    m_store = load_manifold(a);
    m = &m_store;
  }
  AnnotatedCloud cloud = load_or_sample(a, m, 10 * std::sqrt(a.t));
  LaplacianConfig cfg = make_config(a, m);
  ScalarField field = m ? make_field(a.field, *m)
                        : expression_field(
                              a.field.rfind("expr:", 0) == 0 ? a.field.substr(5)
                                                             : a.field,
                              cloud.ambient_dim);
  DetectionReport rep = detect(cloud, field, cfg, q, margin, true, a.threads);
  json j = detection_to_json(rep);
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  json summary{{"flagged", rep.flagged.size()}, {"degenerate", rep.degenerate}};
  if (rep.has_ground_truth) summary["precision"] = rep.precision;
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_spectra(const CommonArgs& a, int k, const std::string& vectors_csv,
                const json& config) {
  SingularManifold m = load_manifold(a);
  SampleMode mode = a.mode == "iid" ? SampleMode::Iid : SampleMode::Grid;
  AnnotatedCloud cloud = sample(m, a.n, mode, a.seed);
  LaplacianConfig cfg = make_config(a, &m);
  SpMat L = laplacian_matrix(cfg, cloud, std::size_t(8) << 30, a.threads);
  SpectrumReport rep = eigensolve(L, k);
  if (!rep.all_converged())
    throw std::runtime_error("eigensolver did not converge all pairs");
  json j = spectrum_to_json(rep);
  if (!a.out.empty()) write_json(j, a.out);
  if (!vectors_csv.empty()) write_eigenvectors_csv(rep, vectors_csv);
  write_manifest(config, a);
  std::cout << json{{"k", k}, {"lambda1", rep.eigenvalues[std::min(1, k - 1)]}}.dump()
            << "\n";
  return 0;
}

int run_compare(const CommonArgs& a, const std::string& smooth_name, int k,
                const json& config) {
  std::string folded_name = a.builtin.empty() ? "folded_rectangle" : a.builtin;
  SingularManifold folded = build_builtin(folded_name, parse_params(a.params));
  SingularManifold smooth = build_builtin(smooth_name);
  FoldInvarianceReport rep = fold_invariance(smooth, folded, a.n, a.t, k);
  json j;
  j["diff_k"] = rep.diff_k;
  j["k"] = k;
  j["correlations"] = rep.correlations;
  j["cluster_of"] = rep.cluster_of;
  j["smooth_eigenvalues"] = std::vector<double>(
      rep.smooth.eigenvalues.data(), rep.smooth.eigenvalues.data() + k + 1);
  j["folded_eigenvalues"] = std::vector<double>(
      rep.folded.eigenvalues.data(), rep.folded.eigenvalues.data() + k + 1);
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  std::cout << json{{"diff_k", rep.diff_k}}.dump() << "\n";
  return 0;
}

int run_bound(const CommonArgs& a, double eps, double M, double b, double Cg,
              const std::string& point_spec, const json& config) {
  BoundParams params;
  if (Cg <= 0) {
    SingularManifold m = load_manifold(a);
    Vec x = point_spec.empty() ? Vec(m.pieces[0].chart(
                                     0.5 * (m.pieces[0].box.lo + m.pieces[0].box.hi)))
                               : parse_point(point_spec);
    Cg = kernel_mass(m, x, a.t);
    if (b <= 0) b = m.density.upper;
    params = BoundParams::from_constants(M, b, Cg, m.intrinsic_dim());
  } else {
    params = BoundParams::from_constants(M, b, Cg, a.d > 0 ? a.d : 1);
  }
  double value = concentration_bound(params, a.n, a.t, eps);
  json j{{"bound", value}, {"eps", eps},  {"n", a.n},
         {"t", a.t},       {"C_v", params.C_v}, {"C_m", params.C_m}};
  if (!a.out.empty()) write_json(j, a.out);
  write_manifest(config, a);
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw_args(argv + 1, argv + argc);

  // Re-run from a manifest: splice in its stored argv.
  if (raw_args.size() == 2 && raw_args[0] == "rerun") {
    try {
      json manifest = laplab::read_json(raw_args[1]);
      raw_args = manifest.at("argv").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      std::cerr << laplab::json{{"type", "validation"}, {"error", e.what()}}.dump()
                << "\n";
      return 2;
    }
  }

  CLI::App app{"graph-Laplacian experiments on piecewise-smooth geometries"};
  app.require_subcommand(1);

  CommonArgs a;
  std::string indices, point_spec = "0.5", points = "boundary",
              tgrid_spec = "1e-2:1e-5:7", vectors_csv, smooth_name = "rectangle";
  int piece = 0, k = 10, resolution = 0;
  double q = 0.02, margin = 5.0, horizon_flag = -1.0, eps = 1.0, M = 1.0,
         b_bound = -1.0, Cg = -1.0;
  bool with_empirical = false, json_mirror = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--builtin", a.builtin, "builtin manifold name");
    sub->add_option("--param", a.params, "builtin parameter key=value");
    sub->add_option("--cloud", a.cloud_path, "external cloud CSV");
    sub->add_option("--field", a.field, "field spec");
    sub->add_option("--t", a.t, "kernel bandwidth");
    sub->add_option("--d", a.d, "intrinsic dimension (external clouds)");
    sub->add_option("--n", a.n, "sample count");
    sub->add_option("--mode", a.mode, "iid|grid")
        ->check(CLI::IsMember({"iid", "grid"}));
    sub->add_option("--seed", a.seed, "sampling seed");
    sub->add_option("--trunc", a.truncation, "truncation radius in sqrt(t) units");
    sub->add_option("-o,--out", a.out, "output path");
    sub->add_option("--manifest", a.manifest, "manifest path");
    sub->add_option("--threads", a.threads, "worker cap (default LAPLAB_THREADS or 1)");
    sub->add_flag("--dry-run", a.dry_run, "validate and print the resolved config");
  };

  auto* sc_sample = app.add_subcommand("sample", "sample an annotated cloud");
  add_common(sc_sample);
  sc_sample->add_option("--horizon", horizon_flag, "regular horizon (default 10 sqrt(t))");
  sc_sample->add_flag("--json", json_mirror, "also write the JSON mirror");

  auto* sc_apply = app.add_subcommand("apply", "apply the graph Laplacian");
  add_common(sc_apply);
  sc_apply->add_option("--indices", indices, "query indices (default: all)");

  auto* sc_predict = app.add_subcommand("predict", "closed-form limit prediction");
  add_common(sc_predict);
  sc_predict->add_option("--point", point_spec, "query point, comma separated");
  sc_predict->add_option("--piece", piece, "piece id of the query");
  sc_predict->add_option("--resolution", resolution, "oracle nodes per dimension");
  sc_predict->add_flag("--with-empirical", with_empirical,
                       "also sample a cloud and report the empirical value");

  auto* sc_oracle = app.add_subcommand("oracle", "quadrature of the limit operator");
  add_common(sc_oracle);
  sc_oracle->add_option("--point", point_spec, "query point");
  sc_oracle->add_option("--piece", piece, "piece id");
  sc_oracle->add_option("--resolution", resolution, "nodes per dimension");

  auto* sc_scaling = app.add_subcommand("scaling", "log-log bandwidth scaling fits");
  add_common(sc_scaling);
  sc_scaling->add_option("--points", points,
                         "comma list of boundary,intersection,edge,interior");
  sc_scaling->add_option("--tgrid", tgrid_spec, "bandwidth grid from:to:count");

  auto* sc_detect = app.add_subcommand("detect", "flag high-|L| points");
  add_common(sc_detect);
  sc_detect->add_option("--q", q, "top quantile");
  sc_detect->add_option("--margin", margin, "ground-truth margin in sqrt(t) units");

  auto* sc_spectra = app.add_subcommand("spectra", "eigenpairs of the Laplacian");
  add_common(sc_spectra);
  sc_spectra->add_option("--k", k, "number of eigenpairs");
  sc_spectra->add_option("--vectors", vectors_csv, "eigenvector CSV path");

  auto* sc_compare = app.add_subcommand("compare", "fold-invariance spectra");
  add_common(sc_compare);
  sc_compare->add_option("--k", k, "nontrivial modes to compare");
  sc_compare->add_option("--smooth", smooth_name, "smooth counterpart builtin");

  auto* sc_bound = app.add_subcommand("bound", "concentration bound");
  add_common(sc_bound);
  sc_bound->add_option("--eps", eps, "deviation epsilon");
  sc_bound->add_option("--M", M, "sup |f|");
  sc_bound->add_option("--b", b_bound, "density upper bound");
  sc_bound->add_option("--Cg", Cg, "kernel mass (computed when omitted)");
  sc_bound->add_option("--point", point_spec, "kernel-mass query point");

  try {
    std::vector<const char*> cargs;
    cargs.push_back("laplab");
    for (auto& s : raw_args) cargs.push_back(s.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << laplab::json{{"type", "validation"}, {"error", e.what()}}.dump()
              << "\n";
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    std::string name = sub->get_name();
    json extra;
    if (name == "sample") extra = {{"horizon", horizon_flag}, {"json", json_mirror}};
    if (name == "apply") extra = {{"indices", indices}};
    if (name == "predict")
      extra = {{"point", point_spec}, {"piece", piece},
               {"with_empirical", with_empirical}, {"resolution", resolution}};
    if (name == "oracle")
      extra = {{"point", point_spec}, {"piece", piece}, {"resolution", resolution}};
    if (name == "scaling") extra = {{"points", points}, {"tgrid", tgrid_spec}};
    if (name == "detect") extra = {{"q", q}, {"margin", margin}};
    if (name == "spectra") extra = {{"k", k}, {"vectors", vectors_csv}};
    if (name == "compare") extra = {{"k", k}, {"smooth", smooth_name}};
    if (name == "bound")
      extra = {{"eps", eps}, {"M", M}, {"b", b_bound}, {"Cg", Cg}};
    json config = resolved_config(name, a, extra, raw_args);
    config["status"] = "ok";

    if (a.dry_run) {
      std::cout << config.dump(2) << "\n";
      return 0;
    }

    double horizon = horizon_flag > 0 ? horizon_flag : 10 * std::sqrt(a.t);
    try {
      if (name == "sample") return run_sample(a, horizon, json_mirror, config);
      if (name == "apply") return run_apply(a, indices, config);
      if (name == "predict")
        return run_predict(a, point_spec, piece, with_empirical, resolution, config);
      if (name == "oracle")
        return run_oracle(a, point_spec, piece, resolution, config);
      if (name == "scaling") return run_scaling(a, points, tgrid_spec, config);
      if (name == "detect") return run_detect(a, q, margin, config);
      if (name == "spectra") return run_spectra(a, k, vectors_csv, config);
      if (name == "compare") return run_compare(a, smooth_name, k, config);
      if (name == "bound")
        return run_bound(a, eps, M, b_bound, Cg, point_spec, config);
      throw std::invalid_argument("unknown subcommand: " + name);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::out_of_range&) {
      throw;
    } catch (const std::length_error&) {
      throw;
    } catch (const std::exception& e) {
      // Numerical failure mid-run: flag any partial artifacts.
      config["status"] = "failed";
      config["error"] = e.what();
      try {
        write_manifest(config, a);
      } catch (...) {
      }
      throw;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << laplab::json{{"type", "validation"}, {"error", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << laplab::json{{"type", "validation"}, {"error", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << laplab::json{{"type", "validation"}, {"error", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << laplab::json{{"type", "numerical"}, {"error", e.what()}}.dump()
              << "\n";
    return 3;
  }
}
