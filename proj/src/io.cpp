#include "nlmin/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nlmin/errors.hpp"

namespace nlmin {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  const char* b = s.data();
  while (*b == ' ') ++b;
  const auto res = std::from_chars(b, s.data() + s.size(), v);
  if (res.ec != std::errc()) throw IoError(path + ": malformed number '" + s + "'");
  return v;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Json to_json(const ClusterReport& r) {
  Json j;
  j["clusters"] = Json::array();
  for (const auto& c : r.clusters)
    j["clusters"].push_back({{"center", vector_json(c.center)}, {"diameter", c.diameter}, {"mass", c.mass},
                             {"members", c.members}});
  j["pairwise_center_distances"] = matrix_json(r.pairwise_center_distances);
  j["unclustered_mass"] = r.unclustered_mass;
  j["total_mass"] = r.total_mass;
  return j;
}

Json to_json(const ELReport& r) {
  Json j{{"lambda_hat", r.lambda_hat}};
  if (r.kind == ELReport::Kind::Measure) {
    j["viol_support"] = r.viol_support;
    j["viol_off"] = r.viol_off;
    j["off_margin"] = r.off_margin;
    j["n_probes"] = r.n_probes;
  } else {
    j["viol_interior"] = r.viol_interior;
    j["viol_zero"] = r.viol_zero;
    j["viol_one"] = r.viol_one;
    j["tau"] = r.tau;
    j["n_interior"] = r.n_interior;
  }
  return j;
}

Json to_json(const DiameterBoundReport& r) {
  return {{"R", r.R},         {"R_plus", r.R_plus}, {"D", r.D},         {"C_m", r.C_m},
          {"kappa", r.kappa}, {"R_bar", r.R_bar},   {"g_shift", r.g_shift}, {"variant", to_string(r.variant)}};
}

Json to_json(const Classification& c) {
  Json j{{"shape", c.shape}};
  j["diagnostics"] = Json::object();
  for (const auto& [k, v] : c.diagnostics) j["diagnostics"][k] = v;
  return j;
}

Json to_json(const ConfinementReport& r) {
  Json j{{"pass", r.pass},        {"sampled_min", r.sampled_min},       {"sampled_argmin", r.sampled_argmin},
         {"t_scan", r.t_scan},    {"grows_at_infinity", r.grows_at_infinity}, {"sampled_certificate", r.sampled_certificate}};
  j["violations"] = Json::array();
  for (const auto& v : r.violations) j["violations"].push_back({{"clause", v.clause}, {"t", v.t}, {"value", v.value}});
  return j;
}

Json to_json(const SecondDerivativeRatioReport& r) {
  return {{"pass", r.pass}, {"worst_t", r.worst_t}, {"worst_s", r.worst_s}, {"margin", r.margin},
          {"sampled_certificate", r.sampled_certificate}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& mu) {
  std::ostringstream os;
  for (int a = 0; a < mu.dim(); ++a) os << 'x' << a << ',';
  os << "weight\n";
  for (int i = 0; i < mu.size(); ++i) {
    for (int a = 0; a < mu.dim(); ++a) os << fmt(mu.points()(a, i)) << ',';
    os << fmt(mu.weights()(i)) << '\n';
  }
  write_text(path, os.str());
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line)) throw IoError(path + ": empty file");
  const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2) throw IoError(path + ": expected coordinates and a weight column");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(parse_double(cell, path));
    if (static_cast<int>(row.size()) != cols) throw IoError(path + ": ragged row");
    rows.push_back(std::move(row));
  }
  const int N = cols - 1;
  PointSet X(N, static_cast<Eigen::Index>(rows.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int a = 0; a < N; ++a) X(a, static_cast<Eigen::Index>(i)) = rows[i][a];
    w(static_cast<Eigen::Index>(i)) = rows[i][N];
  }
  return DiscreteMeasure(std::move(X), std::move(w));
}

void write_density(const std::string& stem, const GridDensity& f) {
  static_assert(std::endian::native == std::endian::little, "density files are little-endian");
  const auto& v = f.values();
  std::string bytes(v.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), v.data(), bytes.size());
  write_text(stem + ".bin", bytes);
  const auto& g = f.grid();
  Json j{{"dims", g.dims},       {"origin", vector_json(g.origin)},
         {"spacing", g.spacing}, {"mass", f.mass()},
         {"dtype", "float64-le"}, {"order", "row-major, last axis fastest"},
         {"values", stem.substr(stem.find_last_of('/') + 1) + ".bin"}};
  write_text(stem + ".json", j.dump(2));
}

GridDensity read_density(const std::string& stem) {
  Json j;
  try {
    j = Json::parse(read_text(stem + ".json"));
  } catch (const Json::exception& e) {
    throw IoError(stem + ".json: " + e.what());
  }
  try {
    const auto dims = j.at("dims").get<std::vector<int>>();
    const auto origin = j.at("origin").get<std::vector<double>>();
    GridSpec g(Eigen::Map<const Eigen::VectorXd>(origin.data(), static_cast<Eigen::Index>(origin.size())),
               j.at("spacing").get<double>(), dims);
    const std::string bytes = read_text(stem + ".bin");
    if (bytes.size() != g.cell_count() * sizeof(double)) throw IoError(stem + ".bin: size does not match the grid");
    std::vector<double> v(g.cell_count());
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return GridDensity(std::move(g), std::move(v));
  } catch (const Json::exception& e) {
    throw IoError(stem + ".json: " + e.what());
  }
}

void write_radial(const std::string& stem, const RadialProfile& p) {
  write_text(stem + ".json", Json{{"dim", p.dim()}, {"dr", p.dr()}, {"values", p.values()}}.dump());
  std::ostringstream os;
  os << "r,value\n";
  for (int k = 0; k < p.shells(); ++k) os << fmt(p.radius(k)) << ',' << fmt(p.values()[k]) << '\n';
  write_text(stem + ".csv", os.str());
}

RadialProfile read_radial(const std::string& stem) {
  try {
    const Json j = Json::parse(read_text(stem + ".json"));
    return RadialProfile(j.at("dim").get<int>(), j.at("dr").get<double>(), j.at("values").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw IoError(stem + ".json: " + e.what());
  }
}

void write_trace_csv(const std::string& path, const OptimizeTrace& t) { write_text(path, t.to_csv()); }

}  // namespace nlmin
