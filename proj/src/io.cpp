#include "stair/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace stair {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_write(const fs::path& path) {
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

// Exact rational from "p/q", an integer or a plain decimal such as "0.05".
Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const Rational num = parse_rational(s.substr(0, slash)), den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in " + s);
    return num / den;
  }
  if (s.empty()) throw std::invalid_argument("empty number");
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  Rational v = 0, scale = 1;
  bool frac = false, digits = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.' && !frac) {
      frac = true;
    } else if (c >= '0' && c <= '9') {
      digits = true;
      v = v * 10 + (c - '0');
      if (frac) scale *= 10;
    } else {
      throw std::invalid_argument("not a number: " + s);
    }
  }
  if (!digits) throw std::invalid_argument("not a number: " + s);
  v /= scale;
  return neg ? Rational(-v) : v;
}

long long parse_int(const std::string& s) {
  std::size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string points(std::span<const Vec2> poly) {
  std::string s = "[";
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) s += ',';
    s += '[' + format_double(poly[i].x) + ',' + format_double(poly[i].y) + ']';
  }
  return s + ']';
}

Polygon parse_points(const json& a) {
  Polygon p;
  for (const auto& v : a) p.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  return p;
}

std::string ids(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s + ']';
}

json row_json(const MetricsRow& r) {
  // Doubles as 17-digit strings so the manifest round-trips exactly.
  return json{{"j", r.j},
              {"area_omega", format_double(r.area_omega)},
              {"y_j", to_string(r.yj)},
              {"mass22", format_double(r.mass22)},
              {"rho_min", format_double(r.rho_min)},
              {"det_min", format_double(r.det_min)},
              {"det_max", format_double(r.det_max)},
              {"c1_delta", format_double(r.c1_delta)},
              {"coverage", format_double(r.coverage)},
              {"residual_area", format_double(r.residual_area)},
              {"cell_count", r.cell_count},
              {"tv_proxy", format_double(r.tv_proxy)},
              {"area_e", format_double(r.area_e)},
              {"base_area", format_double(r.base_area)},
              {"eps", to_string(r.eps)},
              {"eps_used", format_double(r.eps_used)}};
}

MetricsRow row_from_json(const json& j) {
  auto d = [&](const char* k) { return std::stod(j.at(k).get<std::string>()); };
  MetricsRow r;
  r.j = j.at("j").get<int>();
  r.area_omega = d("area_omega");
  r.yj = parse_rational(j.at("y_j").get<std::string>());
  r.mass22 = d("mass22");
  r.rho_min = d("rho_min");
  r.det_min = d("det_min");
  r.det_max = d("det_max");
  r.c1_delta = d("c1_delta");
  r.coverage = d("coverage");
  r.residual_area = d("residual_area");
  r.cell_count = j.at("cell_count").get<std::size_t>();
  r.tv_proxy = d("tv_proxy");
  r.area_e = d("area_e");
  r.base_area = d("base_area");
  r.eps = parse_rational(j.at("eps").get<std::string>());
  r.eps_used = d("eps_used");
  return r;
}

}  // namespace

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
  File f = open_write(path);
  std::fprintf(f.get(), "%s\n", kMetricsHeader);
  for (const MetricsRow& r : rows) {
    const double y = to_double(r.yj);
    std::fprintf(f.get(), "%d,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%zu\n", r.j, format_double(r.area_omega).c_str(),
                 format_double(y).c_str(), format_double(y * r.area_omega).c_str(), format_double(r.mass22).c_str(),
                 format_double(r.rho_min).c_str(), format_double(r.det_min).c_str(), format_double(r.det_max).c_str(),
                 format_double(r.c1_delta).c_str(), format_double(r.coverage).c_str(),
                 format_double(r.residual_area).c_str(), r.cell_count);
  }
}

void write_mesh_json(const fs::path& path, const IterationState& st) {
  File f = open_write(path);
  std::FILE* out = f.get();
  std::fprintf(out, "{\"schema\":\"stair.mesh/1\",\"depth\":%d,\"cell_count\":%zu,\"tiled_area\":%s,\"domain\":%s,", st.j,
               st.u.size(), format_double(st.tiled_area).c_str(), points(st.u.domain()).c_str());
  std::fprintf(out, "\"omega_cells\":%s,\"E\":%s,\n\"cells\":[\n", ids(st.omega_cells).c_str(), ids(st.E).c_str());
  const auto& cells = st.u.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    std::fprintf(out, "{\"id\":%llu,\"depth\":%d,\"tag\":\"%s\",\"polygon\":%s,\"A\":[%s,%s,%s],\"b\":[%s,%s],\"c\":%s}%s\n",
                 static_cast<unsigned long long>(c.id), c.depth, to_string(c.tag).c_str(), points(c.region).c_str(),
                 format_double(c.quad.A.a11).c_str(), format_double(c.quad.A.a12).c_str(),
                 format_double(c.quad.A.a22).c_str(), format_double(c.quad.b.x).c_str(),
                 format_double(c.quad.b.y).c_str(), format_double(c.quad.c).c_str(), i + 1 < cells.size() ? "," : "");
  }
  std::fprintf(out, "]}\n");
  if (std::ferror(out)) throw IoError("write failed: " + path.string());
}

IterationState read_mesh_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty() || line.back() != ',') throw IoError("bad mesh header in " + path.string());
  try {
    line.back() = '}';
    const json head = json::parse(line);
    if (head.at("schema") != "stair.mesh/1") throw IoError("unknown mesh schema");
    IterationState st;
    st.j = head.at("depth").get<int>();
    st.tiled_area = head.at("tiled_area").get<double>();
    st.omega_cells = head.at("omega_cells").get<std::vector<std::size_t>>();
    st.E = head.at("E").get<std::vector<std::size_t>>();
    const auto count = head.at("cell_count").get<std::size_t>();
    if (!std::getline(in, line) || trim(line) != "\"cells\":[") throw IoError("bad mesh body");
    std::vector<Cell> cells;
    cells.reserve(count);
    while (std::getline(in, line)) {
      if (trim(line) == "]}") break;
      if (!line.empty() && line.back() == ',') line.pop_back();
      const json c = json::parse(line);
      Cell cell;
      cell.id = c.at("id").get<std::uint64_t>();
      cell.depth = c.at("depth").get<int>();
      const auto tag = parse_tag(c.at("tag").get<std::string>());
      if (!tag) throw IoError("bad tag " + c.at("tag").get<std::string>());
      cell.tag = *tag;
      cell.region = parse_points(c.at("polygon"));
      const auto& a = c.at("A");
      cell.quad.A = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
      cell.quad.b = {c.at("b").at(0).get<double>(), c.at("b").at(1).get<double>()};
      cell.quad.c = c.at("c").get<double>();
      cells.push_back(std::move(cell));
    }
    if (cells.size() != count) throw IoError("mesh cell count mismatch in " + path.string());
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].id != i) throw IoError("mesh ids are not consecutive in " + path.string());
    for (std::size_t i : st.omega_cells)
      if (i >= count) throw IoError("omega id out of range");
    for (std::size_t i : st.E)
      if (i >= count) throw IoError("E id out of range");
    st.u = PWQ(parse_points(head.at("domain")), std::move(cells));
    for (std::size_t i : st.omega_cells) st.omega.push_back(st.u.cells()[i].region);
    return st;
  } catch (const json::exception& e) {
    throw IoError("malformed mesh " + path.string() + ": " + e.what());
  }
}

void write_report_json(const fs::path& path, const Report& report) {
  json checks = json::array();
  for (const Check& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"status", c.pass ? "pass" : "fail"},
                      {"value", format_double(c.value)},
                      {"bound", format_double(c.bound)},
                      {"bound_source", c.bound_source},
                      {"detail", c.detail}});
  const json doc{{"schema", "stair.report/1"}, {"pass", report.pass()}, {"checks", checks}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

KeyValues read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return kv;
}

void apply_config(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "depth") {
      cfg.depth = static_cast<int>(parse_int(v));
    } else if (k == "eta") {
      cfg.eta = parse_rational(v);
    } else if (k == "coverage-relax") {
      cfg.coverage_relax = parse_rational(v);
    } else if (k == "gap-fraction") {
      cfg.gap_fraction = parse_rational(v);
    } else if (k == "base-coverage") {
      if (v.empty() || v == "default")
        cfg.base_coverage.reset();
      else
        cfg.base_coverage = parse_rational(v);
    } else if (k == "cell-budget") {
      const long long b = parse_int(v);
      if (b <= 0) throw std::invalid_argument("cell-budget must be positive");
      cfg.cell_budget = static_cast<std::size_t>(b);
    } else if (k == "polygon-sides") {
      cfg.polygon_sides = static_cast<int>(parse_int(v));
    } else if (k == "boundary-layers") {
      cfg.boundary_layers = static_cast<int>(parse_int(v));
    } else if (k == "clamp-eps") {
      if (v != "true" && v != "false") throw std::invalid_argument("clamp-eps must be true or false");
      cfg.clamp_eps = v == "true";
    } else if (k == "c1-grid") {
      cfg.c1_grid = static_cast<int>(parse_int(v));
    } else if (k == "threads") {
      cfg.threads = static_cast<unsigned>(parse_int(v));
    } else if (k == "eps-override") {
      // "j:eps,j:eps"
      cfg.eps_override.clear();
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("eps-override entries are j:eps");
        cfg.eps_override[static_cast<int>(parse_int(trim(item.substr(0, colon))))] =
            parse_rational(trim(item.substr(colon + 1)));
      }
    } else {
      throw std::invalid_argument("unknown config key: " + k);
    }
  }
}

KeyValues config_to_kv(const RunConfig& cfg) {
  std::string eps;
  for (const auto& [j, e] : cfg.eps_override) {
    if (!eps.empty()) eps += ',';
    eps += std::to_string(j) + ':' + to_string(e);
  }
  // Threads only affect scheduling, never results, so they stay out of the echo.
  return {{"depth", std::to_string(cfg.depth)},
          {"eta", to_string(cfg.eta)},
          {"coverage-relax", to_string(cfg.coverage_relax)},
          {"gap-fraction", to_string(cfg.gap_fraction)},
          {"base-coverage", cfg.base_coverage ? to_string(*cfg.base_coverage) : "default"},
          {"cell-budget", std::to_string(cfg.cell_budget)},
          {"polygon-sides", std::to_string(cfg.polygon_sides)},
          {"boundary-layers", std::to_string(cfg.boundary_layers)},
          {"clamp-eps", cfg.clamp_eps ? "true" : "false"},
          {"c1-grid", std::to_string(cfg.c1_grid)},
          {"eps-override", eps}};
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void save_run(const fs::path& dir, const Trajectory& tr, const RunConfig& cfg) {
  fs::create_directories(dir);
  json files = json::array();
  std::string combined;
  auto record = [&](const std::string& name) {
    const std::string h = file_hash(dir / name);
    files.push_back({{"name", name}, {"bytes", fs::file_size(dir / name)}, {"fnv1a64", h}});
    combined += name + ':' + h + ';';
  };
  for (const IterationState& st : tr.states) {
    const std::string name = "mesh_" + std::to_string(st.j) + ".json";
    write_mesh_json(dir / name, st);
    record(name);
  }
  const std::vector<MetricsRow> rows = tr.states.empty() ? std::vector<MetricsRow>{} : tr.states.back().metrics;
  write_metrics_csv(dir / "metrics.csv", rows);
  record("metrics.csv");

  json metrics = json::array();
  for (const MetricsRow& r : rows) metrics.push_back(row_json(r));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : combined) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  json config = json::object();
  for (const auto& [k, v] : config_to_kv(cfg)) config[k] = v;
  const json manifest{{"schema", "stair.manifest/1"},
                      {"config", config},
                      {"status", to_string(tr.status)},
                      {"message", tr.message},
                      {"depth_reached", tr.states.empty() ? 0 : tr.states.back().j},
                      {"metrics", metrics},
                      {"files", files},
                      {"content_hash", hex}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

std::pair<Trajectory, RunConfig> load_run(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  RunConfig cfg;
  KeyValues kv;
  for (const auto& [k, v] : m.at("config").items()) kv[k] = v.get<std::string>();
  apply_config(cfg, kv);
  Trajectory tr;
  const std::string status = m.at("status").get<std::string>();
  tr.status = status == "complete"           ? RunStatus::Complete
              : status == "budget_exhausted" ? RunStatus::BudgetExhausted
                                             : RunStatus::EmptyLevelSet;
  tr.message = m.at("message").get<std::string>();
  std::vector<MetricsRow> rows;
  for (const auto& r : m.at("metrics")) rows.push_back(row_from_json(r));
  const int reached = m.at("depth_reached").get<int>();
  for (int j = 0; j <= reached; ++j) {
    IterationState st = read_mesh_json(dir / ("mesh_" + std::to_string(j) + ".json"));
    for (const MetricsRow& r : rows)
      if (r.j <= j) st.metrics.push_back(r);
    tr.states.push_back(std::move(st));
  }
  return {std::move(tr), cfg};
}

}  // namespace stair
