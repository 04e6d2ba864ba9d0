#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gda/pointcloud.hpp"

namespace gda {

namespace {

[[noreturn]] void fail(const std::string& path, long line, const std::string& what) {
  throw FormatError(path + ":" + std::to_string(line) + ": " + what);
}

// Next content line: skips blanks and '#' comments, tracks the line counter.
bool next_line(std::istream& in, std::string& line, long& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto pos = line.find_first_not_of(" \t\r\n");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') continue;
    return true;
  }
  return false;
}

std::vector<double> parse_floats(const std::string& line, const std::string& path, long lineno) {
  std::istringstream iss(line);
  std::vector<double> vals;
  double v;
  while (iss >> v) vals.push_back(v);
  std::string trailing;
  if (iss.clear(), iss >> trailing)
    fail(path, lineno, "unexpected token '" + trailing + "'");
  return vals;
}

PointCloud load_xyz(std::istream& in, const std::string& path) {
  std::string line;
  long lineno = 0;
  std::vector<std::vector<double>> rows;
  long c = -1;
  while (next_line(in, line, lineno)) {
    auto vals = parse_floats(line, path, lineno);
    if (static_cast<long>(vals.size()) < 3)
      fail(path, lineno, "expected at least 3 values, got " + std::to_string(vals.size()));
    if (c < 0) c = static_cast<long>(vals.size());
    if (static_cast<long>(vals.size()) != c)
      fail(path, lineno,
           "inconsistent column count (" + std::to_string(vals.size()) + " vs " +
               std::to_string(c) + ")");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidInputError(path + ": no points");
  PointCloud cloud;
  cloud.points = Tensor<double>(static_cast<long>(rows.size()), c);
  for (long i = 0; i < cloud.n_points(); ++i)
    for (long j = 0; j < c; ++j) cloud.points(i, j) = rows[i][j];
  return cloud;
}

PointCloud load_ply(std::istream& in, const std::string& path) {
  std::string line;
  long lineno = 0;
  if (!next_line(in, line, lineno) || line.rfind("ply", 0) != 0)
    fail(path, lineno, "missing 'ply' magic");

  long n_vertex = -1;
  std::vector<std::string> vprops;   // vertex property names, header order
  bool in_vertex_element = false;
  bool saw_format = false;
  while (true) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "header ends before end_header");
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string kind;
      iss >> kind;
      if (kind != "ascii") fail(path, lineno, "only ascii PLY is supported, got '" + kind + "'");
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      long count;
      if (!(iss >> name >> count)) fail(path, lineno, "malformed element line");
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) n_vertex = count;
      else if (count != 0)
        fail(path, lineno, "unsupported element '" + name + "' with nonzero count");
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      std::string type, name;
      if (!(iss >> type >> name)) fail(path, lineno, "malformed property line");
      if (type == "list") fail(path, lineno, "list properties are not supported on vertices");
      vprops.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else {
      fail(path, lineno, "unrecognized header line '" + tok + "'");
    }
  }
  if (!saw_format) fail(path, lineno, "missing format line");
  if (n_vertex < 0) fail(path, lineno, "missing vertex element");
  if (n_vertex == 0) throw InvalidInputError(path + ": no points");

  // xyz first, remaining scalar properties behind them in header order.
  long ix = -1, iy = -1, iz = -1;
  std::vector<long> extras;
  for (long p = 0; p < static_cast<long>(vprops.size()); ++p) {
    if (vprops[p] == "x") ix = p;
    else if (vprops[p] == "y") iy = p;
    else if (vprops[p] == "z") iz = p;
    else extras.push_back(p);
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(path, lineno, "vertex element lacks x/y/z properties");

  PointCloud cloud;
  cloud.points = Tensor<double>(n_vertex, 3 + static_cast<long>(extras.size()));
  for (long i = 0; i < n_vertex; ++i) {
    if (!next_line(in, line, lineno))
      fail(path, lineno, "expected " + std::to_string(n_vertex) + " vertices, got " +
                             std::to_string(i));
    auto vals = parse_floats(line, path, lineno);
    if (static_cast<long>(vals.size()) != static_cast<long>(vprops.size()))
      fail(path, lineno,
           "vertex row has " + std::to_string(vals.size()) + " values, header declares " +
               std::to_string(vprops.size()));
    cloud.points(i, 0) = vals[ix];
    cloud.points(i, 1) = vals[iy];
    cloud.points(i, 2) = vals[iz];
    for (long e = 0; e < static_cast<long>(extras.size()); ++e)
      cloud.points(i, 3 + e) = vals[extras[e]];
  }
  return cloud;
}

PointCloud load_off(std::istream& in, const std::string& path, const LoadOptions& opts) {
  std::string line;
  long lineno = 0;
  if (!next_line(in, line, lineno)) fail(path, lineno, "empty file");

  // First line is "OFF", optionally with the counts appended ("OFF 8 6 12").
  std::istringstream first(line);
  std::string magic;
  first >> magic;
  if (magic != "OFF") fail(path, lineno, "missing OFF magic, got '" + magic + "'");
  long nv = -1, nf = -1, ne = -1;
  if (!(first >> nv >> nf >> ne)) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "missing count line");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf >> ne)) fail(path, lineno, "malformed count line");
  }
  if (nv < 1) throw InvalidInputError(path + ": no vertices");
  if (nf < 1) fail(path, lineno, "mesh has no faces to sample");

  std::vector<double> verts(static_cast<size_t>(nv) * 3);
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "unexpected end of vertex list");
    auto vals = parse_floats(line, path, lineno);
    if (vals.size() < 3) fail(path, lineno, "vertex needs 3 coordinates");
    for (int a = 0; a < 3; ++a) verts[i * 3 + a] = vals[a];
  }

  struct Tri {
    long a, b, c;
    double area;
  };
  std::vector<Tri> tris;
  tris.reserve(nf);
  double total_area = 0;
  for (long f = 0; f < nf; ++f) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "unexpected end of face list");
    std::istringstream iss(line);
    long cnt;
    if (!(iss >> cnt)) fail(path, lineno, "malformed face line");
    if (cnt != 3) fail(path, lineno, "only triangular faces are supported, got " +
                                         std::to_string(cnt) + "-gon");
    long a, b, c;
    if (!(iss >> a >> b >> c)) fail(path, lineno, "malformed face indices");
    if (a < 0 || a >= nv || b < 0 || b >= nv || c < 0 || c >= nv)
      fail(path, lineno, "face index out of range");
    const double* A = &verts[a * 3];
    const double* B = &verts[b * 3];
    const double* C = &verts[c * 3];
    const double ux = B[0] - A[0], uy = B[1] - A[1], uz = B[2] - A[2];
    const double vx = C[0] - A[0], vy = C[1] - A[1], vz = C[2] - A[2];
    const double cx = uy * vz - uz * vy;
    const double cy = uz * vx - ux * vz;
    const double cz = ux * vy - uy * vx;
    const double area = 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
    tris.push_back({a, b, c, area});
    total_area += area;
  }
  if (!(total_area > 0)) throw InvalidInputError(path + ": mesh has zero surface area");
  if (opts.off_samples < 1) throw ConfigError("off_samples must be >= 1");

  std::vector<double> cdf(tris.size());
  double acc = 0;
  for (size_t t = 0; t < tris.size(); ++t) {
    acc += tris[t].area;
    cdf[t] = acc;
  }

  // Area-weighted triangle pick, then uniform barycentric point via the
  // sqrt trick (Osada et al. shape distributions).
  Rng rng(opts.seed);
  PointCloud cloud;
  cloud.points = Tensor<double>(opts.off_samples, 3);
  for (long s = 0; s < opts.off_samples; ++s) {
    const double u = rng.uniform(0.0, total_area);
    const size_t t = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    const Tri& tri = tris[std::min(t, tris.size() - 1)];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
    const double* A = &verts[tri.a * 3];
    const double* B = &verts[tri.b * 3];
    const double* C = &verts[tri.c * 3];
    for (int axis = 0; axis < 3; ++axis)
      cloud.points(s, axis) = wa * A[axis] + wb * B[axis] + wc * C[axis];
  }
  return cloud;
}

}  // namespace

PointCloud load_cloud(const std::string& path, CloudFormat format, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  PointCloud cloud;
  switch (format) {
    case CloudFormat::Xyz: cloud = load_xyz(in, path); break;
    case CloudFormat::Ply: cloud = load_ply(in, path); break;
    case CloudFormat::Off: cloud = load_off(in, path, opts); break;
  }
  cloud.validate();
  return cloud;
}

void export_ply(const PointCloud& cloud, const std::vector<double>* scalars,
                const std::string& path) {
  cloud.validate();
  if (scalars && static_cast<long>(scalars->size()) != cloud.n_points())
    throw InvalidInputError("export_ply: scalar vector length " +
                            std::to_string(scalars->size()) + " does not match point count " +
                            std::to_string(cloud.n_points()));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.n_points() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (scalars) out << "property float variation\n";
  out << "end_header\n";
  char buf[128];
  for (long i = 0; i < cloud.n_points(); ++i) {
    // %.17g keeps doubles exact through the text round trip.
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", cloud.points(i, 0), cloud.points(i, 1),
                  cloud.points(i, 2));
    out << buf;
    if (scalars) {
      std::snprintf(buf, sizeof buf, " %.17g", (*scalars)[i]);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace gda
