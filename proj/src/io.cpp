#include "laplab/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace laplab {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

json annotation_to_json(const Annotation& a) {
  if (a.regular) return nullptr;
  json j;
  j["kind"] = to_string(a.kind);
  j["singularity_index"] = a.singularity_index;
  j["x0"] = std::vector<double>(a.x0.data(), a.x0.data() + a.x0.size());
  j["r_ambient"] = a.r_ambient;
  j["n1"] = std::vector<double>(a.n1.data(), a.n1.data() + a.n1.size());
  if (a.n2)
    j["n2"] = std::vector<double>(a.n2->data(), a.n2->data() + a.n2->size());
  if (a.theta) j["theta"] = *a.theta;
  return j;
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  if (j.is_null()) return a;
  a.regular = false;
  a.kind = sing_kind_from_string(j.at("kind").get<std::string>());
  a.singularity_index = j.value("singularity_index", -1);
  auto x0 = j.at("x0").get<std::vector<double>>();
  a.x0 = Eigen::Map<Vec>(x0.data(), x0.size());
  a.r_ambient = j.at("r_ambient").get<double>();
  auto n1 = j.at("n1").get<std::vector<double>>();
  a.n1 = Eigen::Map<Vec>(n1.data(), n1.size());
  if (j.contains("n2")) {
    auto n2 = j.at("n2").get<std::vector<double>>();
    a.n2 = Eigen::Map<Vec>(n2.data(), n2.size());
  }
  if (j.contains("theta")) a.theta = j.at("theta").get<double>();
  return a;
}

}  // namespace

void write_cloud_csv(const AnnotatedCloud& cloud, const std::string& path) {
  auto out = open_out(path);
  out << "# ambient_dim=" << cloud.ambient_dim
      << " intrinsic_dim=" << cloud.intrinsic_dim << " seed=" << cloud.seed
      << " mode=" << to_string(cloud.mode) << "\n";
  int N = cloud.ambient_dim, d = cloud.intrinsic_dim;
  for (int i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < N; ++c) out << format_double(cloud.points(i, c)) << ",";
    out << cloud.piece_of[i];
    for (int c = 0; c < d; ++c) out << "," << format_double(cloud.params(i, c));
    const Annotation* a =
        cloud.annotations.empty() ? nullptr : &cloud.annotations[i];
    bool regular = !a || a->regular;
    // Annotation block: kind, x0, r, n1, n2, theta; empty cells when regular.
    out << "," << (regular ? "" : to_string(a->kind));
    for (int c = 0; c < N; ++c)
      out << "," << (regular ? "" : format_double(a->x0[c]));
    out << "," << (regular ? "" : format_double(a->r_ambient));
    for (int c = 0; c < N; ++c)
      out << "," << (regular ? "" : format_double(a->n1[c]));
    for (int c = 0; c < N; ++c)
      out << "," << (!regular && a->n2 ? format_double((*a->n2)[c]) : "");
    out << "," << (!regular && a->theta ? format_double(*a->theta) : "");
    out << "\n";
  }
}

namespace {

void parse_cloud_header(const std::string& line, AnnotatedCloud& cloud) {
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "ambient_dim") cloud.ambient_dim = std::stoi(val);
    if (key == "intrinsic_dim") cloud.intrinsic_dim = std::stoi(val);
    if (key == "seed") cloud.seed = std::stoull(val);
    if (key == "mode") cloud.mode = (val == "iid") ? SampleMode::Iid : SampleMode::Grid;
  }
}

}  // namespace

AnnotatedCloud read_cloud_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  AnnotatedCloud cloud;
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw std::runtime_error("cloud CSV is missing its header line");
  parse_cloud_header(line, cloud);
  int N = cloud.ambient_dim, d = cloud.intrinsic_dim;
  if (N <= 0) throw std::runtime_error("cloud CSV header lacks ambient_dim");

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
  }
  int n = static_cast<int>(rows.size());
  cloud.points.resize(n, N);
  cloud.params.resize(n, d);
  cloud.piece_of.resize(n);
  cloud.annotations.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& cells = rows[i];
    std::size_t expect = N + 1 + d + 1 + N + 1 + N + N + 1;
    if (cells.size() != expect)
      throw std::runtime_error("cloud CSV row has unexpected column count");
    std::size_t c = 0;
    for (int j = 0; j < N; ++j) cloud.points(i, j) = std::stod(cells[c++]);
    cloud.piece_of[i] = std::stoi(cells[c++]);
    for (int j = 0; j < d; ++j) cloud.params(i, j) = std::stod(cells[c++]);
    Annotation a;
    if (!cells[c].empty()) {
      a.regular = false;
      a.kind = sing_kind_from_string(cells[c]);
      ++c;
      a.x0.resize(N);
      for (int j = 0; j < N; ++j) a.x0[j] = std::stod(cells[c++]);
      a.r_ambient = std::stod(cells[c++]);
      a.n1.resize(N);
      for (int j = 0; j < N; ++j) a.n1[j] = std::stod(cells[c++]);
      if (!cells[c].empty()) {
        Vec n2(N);
        for (int j = 0; j < N; ++j) n2[j] = std::stod(cells[c + j]);
        a.n2 = n2;
      }
      c += N;
      if (!cells[c].empty()) a.theta = std::stod(cells[c]);
    }
    cloud.annotations[i] = a;
  }
  return cloud;
}

json cloud_to_json(const AnnotatedCloud& cloud) {
  json j;
  j["ambient_dim"] = cloud.ambient_dim;
  j["intrinsic_dim"] = cloud.intrinsic_dim;
  j["seed"] = cloud.seed;
  j["mode"] = to_string(cloud.mode);
  j["horizon"] = cloud.horizon;
  json pts = json::array(), prm = json::array(), ann = json::array();
  for (int i = 0; i < cloud.size(); ++i) {
    pts.push_back(std::vector<double>(cloud.points.row(i).begin(),
                                      cloud.points.row(i).end()));
    prm.push_back(std::vector<double>(cloud.params.row(i).begin(),
                                      cloud.params.row(i).end()));
    ann.push_back(cloud.annotations.empty()
                      ? json(nullptr)
                      : annotation_to_json(cloud.annotations[i]));
  }
  j["points"] = pts;
  j["params"] = prm;
  j["piece"] = cloud.piece_of;
  j["annotations"] = ann;
  return j;
}

AnnotatedCloud cloud_from_json(const json& j) {
  AnnotatedCloud cloud;
  cloud.ambient_dim = j.at("ambient_dim").get<int>();
  cloud.intrinsic_dim = j.at("intrinsic_dim").get<int>();
  cloud.seed = j.at("seed").get<std::uint64_t>();
  cloud.mode = j.at("mode").get<std::string>() == "iid" ? SampleMode::Iid
                                                        : SampleMode::Grid;
  cloud.horizon = j.value("horizon", std::numeric_limits<double>::infinity());
  const auto& pts = j.at("points");
  int n = static_cast<int>(pts.size());
  cloud.points.resize(n, cloud.ambient_dim);
  cloud.params.resize(n, cloud.intrinsic_dim);
  cloud.piece_of = j.at("piece").get<std::vector<int>>();
  cloud.annotations.resize(n);
  for (int i = 0; i < n; ++i) {
    auto row = pts[i].get<std::vector<double>>();
    for (int c = 0; c < cloud.ambient_dim; ++c) cloud.points(i, c) = row[c];
    auto prow = j.at("params")[i].get<std::vector<double>>();
    for (int c = 0; c < cloud.intrinsic_dim; ++c) cloud.params(i, c) = prow[c];
    cloud.annotations[i] = annotation_from_json(j.at("annotations")[i]);
  }
  return cloud;
}

AnnotatedCloud read_external_csv(const std::string& path, int intrinsic_dim) {
  auto in = open_in(path);
  std::string line;
  AnnotatedCloud cloud;
  cloud.intrinsic_dim = intrinsic_dim;

  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      parse_cloud_header(line, cloud);
      continue;
    }
    auto cells = split_csv(line);
    std::vector<double> row;
    for (auto& cell : cells) {
      if (cell.empty()) break;
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) break;  // non-numeric tail (piece ids etc.)
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (first) {
      if (cloud.ambient_dim <= 0) cloud.ambient_dim = static_cast<int>(row.size());
      first = false;
    }
    row.resize(cloud.ambient_dim, 0.0);
    rows.push_back(std::move(row));
  }
  if (intrinsic_dim > 0) cloud.intrinsic_dim = intrinsic_dim;
  if (cloud.intrinsic_dim <= 0)
    throw std::runtime_error(
        "external clouds must declare intrinsic_dim (header or argument)");
  int n = static_cast<int>(rows.size());
  cloud.points.resize(n, cloud.ambient_dim);
  cloud.params = Mat::Zero(n, cloud.intrinsic_dim);
  cloud.piece_of.assign(n, 0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < cloud.ambient_dim; ++c) cloud.points(i, c) = rows[i][c];
  return cloud;
}

void write_matrix_coo(const SpMat& L, const LaplacianConfig& cfg,
                      const std::string& path) {
  auto out = open_out(path);
  json header;
  header["n"] = L.rows();
  header["t"] = cfg.t;
  header["d"] = cfg.d;
  header["truncation"] = cfg.truncation_radius;
  header["nnz"] = L.nonZeros();
  out << header.dump() << "\n";
  for (int k = 0; k < L.outerSize(); ++k)
    for (SpMat::InnerIterator it(L, k); it; ++it)
      out << it.row() << " " << it.col() << " " << format_double(it.value())
          << "\n";
}

void write_apply_csv(const std::vector<double>& fvals,
                     const std::vector<double>& lvals, const std::string& path) {
  auto out = open_out(path);
  out << "index,f,Lf\n";
  for (std::size_t i = 0; i < lvals.size(); ++i)
    out << i << "," << format_double(fvals[i]) << "," << format_double(lvals[i])
        << "\n";
}

json prediction_to_json(const PredictionReport& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["t"] = r.t;
  j["r"] = r.r;
  if (r.theta) j["theta"] = *r.theta;
  j["coefficient"] = r.coefficient;
  j["order"] = r.order == AsymptoticOrder::InvSqrtT ? "t^{-1/2}" : "1";
  j["components"] = r.components;
  j["oracle_value"] = r.oracle_value;
  if (r.empirical_value) j["empirical_value"] = *r.empirical_value;
  j["relative_error"] = r.relative_error;
  return j;
}

json spectrum_to_json(const SpectrumReport& r, bool include_vectors) {
  json j;
  j["eigenvalues"] =
      std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.count());
  j["converged"] = r.converged;
  j["residuals"] =
      std::vector<double>(r.residuals.data(), r.residuals.data() + r.count());
  j["iterations"] = r.iterations;
  j["norm_bound"] = r.norm_bound;
  j["dense_path"] = r.dense_path;
  if (include_vectors) {
    json vecs = json::array();
    for (int c = 0; c < r.count(); ++c)
      vecs.push_back(std::vector<double>(r.eigenvectors.col(c).begin(),
                                         r.eigenvectors.col(c).end()));
    j["eigenvectors"] = vecs;
  }
  return j;
}

json scaling_to_json(const ScalingFit& fit) {
  json j;
  j["t_grid"] = fit.t_grid;
  j["log_values"] = fit.log_values;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  if (std::holds_alternative<int>(fit.query))
    j["point_index"] = std::get<int>(fit.query);
  return j;
}

json detection_to_json(const DetectionReport& r) {
  json j;
  j["quantile"] = r.quantile;
  j["flagged"] = r.flagged;
  j["degenerate"] = r.degenerate;
  j["scores"] = r.scores;
  if (r.has_ground_truth) {
    j["margin_sqrt_t"] = r.margin_sqrt_t;
    j["true_positive"] = r.true_positive;
    j["false_positive"] = r.false_positive;
    j["false_negative"] = r.false_negative;
    j["true_negative"] = r.true_negative;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
  }
  return j;
}

json deviation_to_json(const DeviationReport& r) {
  json j;
  j["quadrature_value"] = r.quadrature_value;
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  j["trials"] = r.trials;
  j["eps_grid"] = r.eps_grid;
  j["exceed_frequency"] = r.exceed_frequency;
  j["bound"] = r.bound;
  j["binomial_sd"] = r.binomial_sd;
  j["C_v"] = r.params.C_v;
  j["C_m"] = r.params.C_m;
  j["M"] = r.params.M;
  j["b"] = r.params.b;
  return j;
}

json profile_to_json(const ProfileFit& r) {
  json j;
  json fams = json::array();
  for (const auto& f : r.families) {
    json jf;
    jf["family"] = to_string(f.family);
    jf["converged"] = f.converged;
    jf["A"] = f.A;
    jf["B"] = f.B;
    jf["C"] = f.C;
    jf["residual"] = f.residual;
    jf["iterations"] = f.iterations;
    fams.push_back(jf);
  }
  j["families"] = fams;
  j["classified"] = to_string(r.classified);
  return j;
}

void write_scaling_csv(const ScalingFit& fit, const std::string& path) {
  auto out = open_out(path);
  out << "log_t,log_abs_L\n";
  for (std::size_t i = 0; i < fit.t_grid.size(); ++i)
    out << format_double(std::log(fit.t_grid[i])) << ","
        << format_double(fit.log_values[i]) << "\n";
}

void write_eigenvectors_csv(const SpectrumReport& r, const std::string& path) {
  auto out = open_out(path);
  out << "index";
  for (int c = 0; c < r.count(); ++c) out << ",mode" << c;
  out << "\n";
  for (int i = 0; i < r.eigenvectors.rows(); ++i) {
    out << i;
    for (int c = 0; c < r.count(); ++c)
      out << "," << format_double(r.eigenvectors(i, c));
    out << "\n";
  }
}

void write_json(const json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  auto in = open_in(path);
  json j;
  in >> j;
  return j;
}

}  // namespace laplab
