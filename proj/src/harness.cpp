#include "rbc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "rbc/errors.hpp"

namespace fs = std::filesystem;

namespace rbc::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last || first == last) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt17(v[i]);
  return s;
}

struct Field {
  std::function<void(RunSpec&, const std::string&)> set;
  std::function<std::string(const RunSpec&)> get;
};

using Section = std::vector<std::pair<std::string, Field>>;

template <class Get>
Field real(Get g) {
  return {[g](RunSpec& s, const std::string& v) { g(s) = parse_double(v); },
          [g](const RunSpec& s) { return fmt17(g(const_cast<RunSpec&>(s))); }};
}
template <class Get>
Field integer(Get g) {
  return {[g](RunSpec& s, const std::string& v) {
            const long long x = parse_int(v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
              throw std::invalid_argument("integer out of range");
            g(s) = static_cast<int>(x);
          },
          [g](const RunSpec& s) { return std::to_string(g(const_cast<RunSpec&>(s))); }};
}
template <class Get>
Field boolean(Get g) {
  return {[g](RunSpec& s, const std::string& v) { g(s) = parse_bool(v); },
          [g](const RunSpec& s) { return std::string(g(const_cast<RunSpec&>(s)) ? "true" : "false"); }};
}
template <class Get>
Field list(Get g) {
  return {[g](RunSpec& s, const std::string& v) { g(s) = parse_list(v); },
          [g](const RunSpec& s) { return join(g(const_cast<RunSpec&>(s))); }};
}

const std::vector<std::pair<std::string, Section>>& registry() {
  static const std::vector<std::pair<std::string, Section>> r = {
      {"run",
       {{"mode", {[](RunSpec& s, const std::string& v) { s.mode = parse_mode(v); },
                  [](const RunSpec& s) { return to_string(s.mode); }}},
        {"out", {[](RunSpec& s, const std::string& v) { s.out = v; }, [](const RunSpec& s) { return s.out; }}},
        {"seed", {[](RunSpec& s, const std::string& v) {
                    const long long x = parse_int(v);
                    if (x < 0) throw std::invalid_argument("seed must be non-negative");
                    s.seed = static_cast<std::uint64_t>(x);
                  },
                  [](const RunSpec& s) { return std::to_string(s.seed); }}},
        {"jobs", integer([](RunSpec& s) -> int& { return s.jobs; })}}},
      {"sim",
       {{"Ra", real([](RunSpec& s) -> double& { return s.sim.Ra; })},
        {"Pr", real([](RunSpec& s) -> double& { return s.sim.Pr; })},
        {"L", real([](RunSpec& s) -> double& { return s.sim.L; })},
        {"Nx", integer([](RunSpec& s) -> int& { return s.sim.Nx; })},
        {"Nz", integer([](RunSpec& s) -> int& { return s.sim.Nz; })},
        {"dt", real([](RunSpec& s) -> double& { return s.sim.dt; })},
        {"t_end", real([](RunSpec& s) -> double& { return s.sim.t_end; })},
        {"transient_fraction", real([](RunSpec& s) -> double& { return s.sim.transient_fraction; })},
        {"cfl_target", real([](RunSpec& s) -> double& { return s.sim.cfl_target; })},
        {"cfl_limit", real([](RunSpec& s) -> double& { return s.sim.cfl_limit; })},
        {"amplitude", real([](RunSpec& s) -> double& { return s.amplitude; })},
        {"hardy_every", integer([](RunSpec& s) -> int& { return s.hardy_every; })},
        {"checkpoints", boolean([](RunSpec& s) -> bool& { return s.checkpoints; })}}},
      {"sweep",
       {{"ra", list([](RunSpec& s) -> std::vector<double>& { return s.ra; })},
        {"pr", list([](RunSpec& s) -> std::vector<double>& { return s.pr; })},
        {"min_decades", real([](RunSpec& s) -> double& { return s.min_decades; })}}},
      {"stokes",
       {{"R", real([](RunSpec& s) -> double& { return s.stokes.R; })},
        {"R0", real([](RunSpec& s) -> double& { return s.stokes.R0; })},
        {"L", real([](RunSpec& s) -> double& { return s.stokes.L; })},
        {"Nz", integer([](RunSpec& s) -> int& { return s.stokes.Nz; })},
        {"Nt", integer([](RunSpec& s) -> int& { return s.stokes.Nt; })},
        {"dt", real([](RunSpec& s) -> double& { return s.stokes.dt; })},
        {"scheme", {[](RunSpec& s, const std::string& v) {
                      if (v == "bdf2")
                        s.stokes.scheme = stokes::TimeScheme::bdf2;
                      else if (v == "crank-nicolson" || v == "crank_nicolson" || v == "cn")
                        s.stokes.scheme = stokes::TimeScheme::crank_nicolson;
                      else
                        throw std::invalid_argument("scheme must be bdf2 or crank-nicolson");
                    },
                    [](const RunSpec& s) { return stokes::to_string(s.stokes.scheme); }}},
        {"strip_trials", integer([](RunSpec& s) -> int& { return s.stokes.strip_trials; })},
        {"half_trials", integer([](RunSpec& s) -> int& { return s.stokes.half_trials; })},
        {"modes_per_trial", integer([](RunSpec& s) -> int& { return s.stokes.modes_per_trial; })},
        {"refine", boolean([](RunSpec& s) -> bool& { return s.stokes.refine; })},
        {"negative_control", boolean([](RunSpec& s) -> bool& { return s.stokes.negative_control; })},
        {"strip_ratio_ceiling", real([](RunSpec& s) -> double& { return s.stokes.strip_ratio_ceiling; })},
        {"half_ratio_ceiling", real([](RunSpec& s) -> double& { return s.stokes.half_ratio_ceiling; })},
        {"decomposition_tol", real([](RunSpec& s) -> double& { return s.stokes.decomposition_tol; })},
        {"boundary_tol", real([](RunSpec& s) -> double& { return s.stokes.boundary_tol; })},
        {"divergence_tol", real([](RunSpec& s) -> double& { return s.stokes.divergence_tol; })}}},
      {"kernels",
       {{"t_samples", list([](RunSpec& s) -> std::vector<double>& { return s.kernels.t_samples; })},
        {"z_samples", list([](RunSpec& s) -> std::vector<double>& { return s.kernels.z_samples; })},
        {"d", integer([](RunSpec& s) -> int& { return s.kernels.d; })},
        {"ee1_ceiling", real([](RunSpec& s) -> double& { return s.kernels.ee1_ceiling; })},
        {"constant_ceiling", real([](RunSpec& s) -> double& { return s.kernels.constant_ceiling; })},
        {"spread_ceiling", real([](RunSpec& s) -> double& { return s.kernels.spread_ceiling; })}}},
      {"stability",
       {{"ra_lo", real([](RunSpec& s) -> double& { return s.stability.ra_lo; })},
        {"ra_hi", real([](RunSpec& s) -> double& { return s.stability.ra_hi; })},
        {"Pr", real([](RunSpec& s) -> double& { return s.stability.Pr; })},
        {"Nz", integer([](RunSpec& s) -> int& { return s.stability.Nz; })},
        {"scan_points", integer([](RunSpec& s) -> int& { return s.stability.scan_points; })}}},
  };
  return r;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& [name, fields] : registry()) {
    if (name != section) continue;
    for (const auto& [k, f] : fields)
      if (k == key) return &f;
  }
  return nullptr;
}

bool known_section(const std::string& s) {
  for (const auto& [name, fields] : registry())
    if (name == s) return true;
  return false;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simulate:
      return "simulate";
    case Mode::sweep:
      return "sweep";
    case Mode::certify_stokes:
      return "certify-stokes";
    case Mode::certify_kernels:
      return "certify-kernels";
    case Mode::stability_scan:
      return "stability-scan";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::simulate, Mode::sweep, Mode::certify_stokes, Mode::certify_kernels, Mode::stability_scan})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

RunSpec parse_config(const std::string& text) {
  RunSpec spec;
  std::istringstream in(text);
  std::string raw, section;
  std::map<std::string, int> seen;
  int line = 0;
  auto fail = [&](const std::string& what) { throw ConfigError("line " + std::to_string(line) + ": " + what); };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    for (std::size_t i = 0; i < s.size(); ++i)
      if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
        s.resize(i);
        break;
      }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!known_section(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (section.empty()) fail("key '" + key + "' outside any section");
    const Field* f = find_field(section, key);
    if (!f) fail("unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (seen.count(full)) fail("duplicate key '" + key + "' (first set on line " + std::to_string(seen[full]) + ")");
    seen[full] = line;
    try {
      f->set(spec, value);
    } catch (const std::invalid_argument& e) {
      fail(full + ": " + e.what());
    }
  }
  validate(spec);
  return spec;
}

std::string serialize_config(const RunSpec& spec) {
  std::string out;
  for (const auto& [name, fields] : registry()) {
    out += "[" + name + "]\n";
    for (const auto& [k, f] : fields) out += k + " = " + f.get(spec) + "\n";
    out += "\n";
  }
  return out;
}

void validate(const RunSpec& s) {
  auto bad = [](const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); };
  if (s.jobs < 1) bad("run.jobs", "must be at least 1");
  try {
    s.sim.validate();
  } catch (const ParameterError& e) {
    bad("sim", e.what());
  }
  if (!(s.amplitude >= 0.0)) bad("sim.amplitude", "must be non-negative");
  if (s.hardy_every < 0) bad("sim.hardy_every", "must be non-negative");
  if (s.mode == Mode::sweep) {
    if (s.ra.empty()) bad("sweep.ra", "sweep mode needs at least one Ra");
    if (s.pr.empty()) bad("sweep.pr", "sweep mode needs at least one Pr");
  }
  for (double v : s.ra)
    if (!(v > 0.0) || !std::isfinite(v)) bad("sweep.ra", "values must be positive and finite");
  for (double v : s.pr)
    if (!(v > 0.0)) bad("sweep.pr", "values must be positive");
  if (!(s.min_decades >= 0.0)) bad("sweep.min_decades", "must be non-negative");
  const auto& k = s.stokes;
  if (!(k.R > 0.0)) bad("stokes.R", "must be positive");
  if (!(k.R0 > 0.0)) bad("stokes.R0", "must be positive");
  if (!(k.L > 0.0)) bad("stokes.L", "must be positive");
  if (k.Nz < 9) bad("stokes.Nz", "must be at least 9");
  if (k.Nt < 2) bad("stokes.Nt", "must be at least 2");
  if (!(k.dt > 0.0)) bad("stokes.dt", "must be positive");
  if (k.strip_trials < 1) bad("stokes.strip_trials", "must be at least 1");
  if (k.half_trials < 0) bad("stokes.half_trials", "must be non-negative");
  if (k.modes_per_trial < 1) bad("stokes.modes_per_trial", "must be at least 1");
  if (s.kernels.t_samples.empty()) bad("kernels.t_samples", "must not be empty");
  for (double t : s.kernels.t_samples)
    if (!(t >= 1e-3 && t <= 1e3)) bad("kernels.t_samples", "values must lie in [1e-3, 1e3]");
  for (double z : s.kernels.z_samples)
    if (!(z > 0.0)) bad("kernels.z_samples", "values must be positive");
  if (s.kernels.d != 2 && s.kernels.d != 3) bad("kernels.d", "must be 2 or 3");
  if (!(s.stability.ra_lo > 0.0 && s.stability.ra_hi > s.stability.ra_lo))
    bad("stability.ra_hi", "need 0 < ra_lo < ra_hi");
  if (!(s.stability.Pr > 0.0)) bad("stability.Pr", "must be positive");
  if (s.stability.Nz < 9) bad("stability.Nz", "must be at least 9");
  if (s.stability.scan_points < 2) bad("stability.scan_points", "must be at least 2");
}

// ---- CSV ----

namespace {

const char* kColumns[] = {"index", "Ra",     "Pr",        "L",       "Nx",           "Nz",
                          "dt",    "t_avg",  "nu_plane_mean", "nu_volume", "nu_dissipation", "spread",
                          "energy_residual", "min_T", "max_T", "hardy_max", "wall_clock", "status",
                          "error"};
constexpr int kNcol = sizeof(kColumns) / sizeof(kColumns[0]);

std::string fmt12(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

const char* kTags[] = {"divergence", "step_size", "run", "config", "parameter", "numerical", "state", "error"};

std::string error_tag(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const StepSizeError*>(&e)) return "step_size";
  if (dynamic_cast<const RunError*>(&e)) return "run";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ParameterError*>(&e)) return "parameter";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const StateError*>(&e)) return "state";
  return "error";
}

}  // namespace

std::string csv_header() {
  std::string h = std::string(kCsvVersion) + "\n";
  for (int i = 0; i < kNcol; ++i) h += (i ? "," : "") + std::string(kColumns[i]);
  return h + "\n";
}

std::string csv_line(const SweepRow& r) {
  std::string s = std::to_string(r.index);
  for (double v : {r.Ra, r.Pr, r.L}) s += "," + fmt12(v);
  s += "," + std::to_string(r.Nx) + "," + std::to_string(r.Nz);
  for (double v : {r.dt, r.t_avg, r.nu_plane_mean, r.nu_volume, r.nu_dissipation, r.spread, r.energy_residual,
                   r.min_T, r.max_T, r.hardy_max, r.wall_clock})
    s += "," + fmt12(v);
  s += "," + r.status + "," + sanitize(r.error);
  return s + "\n";
}

void validate_row(const SweepRow& r) {
  if (r.index < 0) throw InputError("row index must be non-negative");
  if (!(r.Ra > 0.0) || !(r.Pr > 0.0)) throw InputError("row " + std::to_string(r.index) + ": Ra and Pr must be positive");
  if (r.ok()) {
    if (r.Nx <= 0 || r.Nz <= 0) throw InputError("row " + std::to_string(r.index) + ": grid sizes must be positive");
    for (double v : {r.L, r.dt, r.t_avg, r.nu_plane_mean, r.nu_volume, r.nu_dissipation, r.spread, r.energy_residual,
                     r.min_T, r.max_T})
      if (!std::isfinite(v)) throw InputError("row " + std::to_string(r.index) + ": non-finite value in an ok row");
  } else {
    if (std::find(std::begin(kTags), std::end(kTags), r.status) == std::end(kTags))
      throw InputError("row " + std::to_string(r.index) + ": unknown status '" + r.status + "'");
  }
}

SweepResult read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(path + " line " + std::to_string(lineno) + ": " + what);
  };
  ++lineno;
  if (!std::getline(in, line) || line != kCsvVersion) fail("missing version line '" + std::string(kCsvVersion) + "'");
  ++lineno;
  if (!std::getline(in, line) || line + "\n" != csv_header().substr(csv_header().find('\n') + 1))
    fail("unexpected column header");
  SweepResult r;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (int i = 0; i < kNcol - 1; ++i) {
      const auto c = line.find(',', pos);
      if (c == std::string::npos) fail("expected " + std::to_string(kNcol) + " fields");
      f.push_back(line.substr(pos, c - pos));
      pos = c + 1;
    }
    f.push_back(line.substr(pos));
    SweepRow row;
    try {
      row.index = static_cast<int>(parse_int(f[0]));
      row.Ra = parse_double(f[1]);
      row.Pr = parse_double(f[2]);
      row.L = parse_double(f[3]);
      row.Nx = static_cast<int>(parse_int(f[4]));
      row.Nz = static_cast<int>(parse_int(f[5]));
      double* dst[] = {&row.dt,         &row.t_avg,           &row.nu_plane_mean, &row.nu_volume,
                       &row.nu_dissipation, &row.spread,      &row.energy_residual, &row.min_T,
                       &row.max_T,      &row.hardy_max,       &row.wall_clock};
      for (int i = 0; i < 11; ++i) *dst[i] = parse_double(f[6 + i]);
      row.status = f[17];
      row.error = f[18];
      validate_row(row);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    } catch (const InputError& e) {
      fail(e.what());
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ---- sweep ----

namespace {

SweepRow run_point(const RunSpec& spec, int index, double Ra, double Pr, const std::string& ckpt_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.index = index;
  row.Ra = Ra;
  row.Pr = Pr;
  row.L = spec.sim.L;
  row.hardy_max = std::numeric_limits<double>::quiet_NaN();
  try {
    SimParams p = spec.sim;
    p.Ra = Ra;
    p.Pr = Pr;
    p = with_defaults(p);
    row.Nx = p.Nx;
    row.Nz = p.Nz;
    RunOptions opts;
    opts.seed = spec.seed + static_cast<std::uint64_t>(index);
    opts.amplitude = spec.amplitude;
    opts.hardy_every = spec.hardy_every;
    const Trajectory tr = run(p, opts);
    const NusseltReport nr = nusselt_report(tr.averages);
    row.dt = tr.dt_last;
    row.t_avg = tr.averages.weight;
    row.nu_plane_mean = nr.nu_plane_mean;
    row.nu_volume = nr.nu_volume;
    row.nu_dissipation = nr.nu_dissipation;
    row.spread = nr.spread;
    row.energy_residual = energy_balance_residual(tr.averages, p);
    row.min_T = tr.min_T;
    row.max_T = tr.max_T;
    if (!tr.hardy_series.empty())
      row.hardy_max = *std::max_element(tr.hardy_series.begin(), tr.hardy_series.end());
    if (!ckpt_dir.empty())
      save_checkpoint(ckpt_dir + "/point_" + std::to_string(index) + ".bin", tr.final_state, p);
  } catch (const std::exception& e) {
    row.status = error_tag(e);
    row.error = e.what();
  }
  row.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

SweepResult run_sweep(const RunSpec& spec, const SweepOptions& opts) {
  validate(spec);
  std::vector<std::pair<double, double>> points;
  if (spec.mode == Mode::simulate && spec.ra.empty() && spec.pr.empty()) {
    points.emplace_back(spec.sim.Ra, spec.sim.Pr);
  } else {
    if (spec.ra.empty() || spec.pr.empty()) throw ConfigError("sweep.ra: sweep axes must be non-empty");
    for (double ra : spec.ra)
      for (double pr : spec.pr) points.emplace_back(ra, pr);
  }

  std::ofstream csv;
  std::string ckpt_dir;
  if (!spec.out.empty()) {
    fs::create_directories(spec.out);
    if (spec.checkpoints) {
      ckpt_dir = spec.out + "/checkpoints";
      fs::create_directories(ckpt_dir);
    }
    csv.open(spec.out + "/results.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + spec.out + "/results.csv");
    csv << csv_header() << std::flush;
  }

  const int n = static_cast<int>(points.size());
  std::vector<std::optional<SweepRow>> done(n);
  SweepResult result;
  std::mutex mu;
  int next = 0, emitted = 0;

  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || (opts.cancel && opts.cancel->load())) return;
        i = next++;
      }
      SweepRow row = run_point(spec, i, points[i].first, points[i].second, ckpt_dir);
      std::lock_guard<std::mutex> lock(mu);
      done[i] = std::move(row);
      // single appender: emit the completed prefix in index order
      while (emitted < n && done[emitted]) {
        const SweepRow& r = *done[emitted];
        if (csv.is_open()) csv << csv_line(r) << std::flush;
        if (opts.on_row) opts.on_row(r);
        result.rows.push_back(r);
        ++emitted;
      }
    }
  };
  const int jobs = std::max(1, std::min(spec.jobs, n));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!spec.out.empty()) {
    std::ofstream js(spec.out + "/summary.json", std::ios::trunc);
    if (!js) throw IoError("cannot write " + spec.out + "/summary.json");
    js << summary_json(spec, result) << "\n";
  }
  return result;
}

// ---- fits, summary ----

namespace {

bool same_pr(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

struct Line {
  double slope, intercept, se, r2;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  const double sse = std::max(0.0, syy - l.slope * sxy);
  l.se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  l.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return l;
}

}  // namespace

ScalingFit fit_scaling_at(const SweepResult& r, double Pr, double min_decades) {
  std::vector<double> x, xb, y;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& row : r.rows) {
    if (!row.ok() || !same_pr(row.Pr, Pr)) continue;
    if (!(row.Ra > 1.0) || !(row.nu_volume > 0.0)) throw FitError("fit needs Ra > 1 and Nu > 0");
    x.push_back(std::log(row.Ra));
    xb.push_back(std::log(row.Ra * std::log(row.Ra)));
    y.push_back(std::log(row.nu_volume));
    lo = std::min(lo, row.Ra);
    hi = std::max(hi, row.Ra);
  }
  if (x.size() < 3) throw FitError("fit needs at least 3 completed points at Pr = " + fmt12(Pr));
  ScalingFit f;
  f.Pr = Pr;
  f.points = static_cast<int>(x.size());
  f.decades = std::log10(hi / lo);
  if (f.decades < min_decades - 1e-12)
    throw FitError("Ra span of " + fmt12(f.decades) + " decades is below the required " + fmt12(min_decades));
  const Line a = least_squares(x, y), b = least_squares(xb, y);
  f.exponent = a.slope;
  f.prefactor = std::exp(a.intercept);
  f.stderr_exponent = a.se;
  f.r2 = a.r2;
  boost::math::students_t dist(static_cast<double>(x.size() - 2));
  f.ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * a.se;
  f.exponent_bound_form = b.slope;
  f.prefactor_bound_form = std::exp(b.intercept);
  return f;
}

ScalingFit fit_scaling(const SweepResult& r, double min_decades) {
  std::optional<double> pr;
  for (const auto& row : r.rows) {
    if (!row.ok()) continue;
    if (pr && !same_pr(*pr, row.Pr)) throw FitError("rows carry several Pr values; pass the one to fit");
    pr = row.Pr;
  }
  if (!pr) throw FitError("no completed rows");
  return fit_scaling_at(r, *pr, min_decades);
}

std::string summary_json(const RunSpec& spec, const SweepResult& r) {
  nlohmann::json j;
  j["schema_version"] = kSummarySchema;
  j["mode"] = to_string(spec.mode);
  j["seed"] = spec.seed;
  std::vector<BoundPoint> bp;
  std::vector<double> prs;
  int ok = 0;
  j["points"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json p = {{"index", row.index}, {"Ra", row.Ra}, {"Pr", row.Pr}, {"status", row.status}};
    if (row.ok()) {
      ++ok;
      p["Nu"] = row.nu_volume;
      p["spread"] = row.spread;
      p["branch"] = to_string(classify_branch(row.Ra, row.Pr));
      bp.push_back({row.Ra, row.Pr, row.nu_volume});
      if (std::none_of(prs.begin(), prs.end(), [&](double v) { return same_pr(v, row.Pr); })) prs.push_back(row.Pr);
    } else {
      p["error"] = row.error;
    }
    j["points"].push_back(p);
  }
  j["counts"] = {{"total", r.rows.size()}, {"ok", ok}, {"failed", static_cast<int>(r.rows.size()) - ok}};
  if (!bp.empty()) try {
    const BoundCheckReport b = bound_check(bp);
    std::vector<std::string> branches;
    for (auto br : b.branches) branches.push_back(to_string(br));
    // the single constant in Nu <= C (Ra ln Ra)^(1/3), whatever the branch
    double c_third = 0.0;
    for (const auto& p : bp) c_third = std::max(c_third, p.Nu / std::cbrt(p.Ra * std::log(p.Ra)));
    j["bound_check"] = {{"C", b.C},
                        {"binding_index", b.binding_index},
                        {"branches", branches},
                        {"C_per_point", b.C_per_point},
                        {"C_ra_ln_ra_third", c_third}};
  } catch (const Error& e) {
    j["bound_check"] = {{"error", e.what()}};
  }
  j["fits"] = nlohmann::json::array();
  for (double pr : prs) {
    try {
      const ScalingFit f = fit_scaling_at(r, pr, spec.min_decades);
      j["fits"].push_back({{"Pr", pr},
                           {"points", f.points},
                           {"decades", f.decades},
                           {"exponent", f.exponent},
                           {"prefactor", f.prefactor},
                           {"stderr", f.stderr_exponent},
                           {"ci95", f.ci95},
                           {"r2", f.r2},
                           {"exponent_bound_form", f.exponent_bound_form},
                           {"prefactor_bound_form", f.prefactor_bound_form}});
    } catch (const FitError& e) {
      j["fits"].push_back({{"Pr", pr}, {"fit_error", e.what()}});
    }
  }
  return j.dump(2);
}

Nondimensional dimensional_to_nondimensional(const Physical& p) {
  for (double v : {p.nu, p.g, p.alpha, p.chi, p.h})
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("physical parameters must be positive and finite");
  if (!(p.T_bottom > p.T_top)) throw DomainError("need T_bottom > T_top (heating from below)");
  return {p.g * p.alpha * (p.T_bottom - p.T_top) * p.h * p.h * p.h / (p.nu * p.chi), p.nu / p.chi};
}

// ---- plots ----

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::vector<double> ticks(double lo, double hi, bool log) {
  std::vector<double> t;
  if (log) {
    const int a = static_cast<int>(std::floor(std::log10(lo))), b = static_cast<int>(std::ceil(std::log10(hi)));
    const bool dense = b - a <= 2;
    for (int e = a; e <= b; ++e)
      for (double m : dense ? std::vector<double>{1, 2, 5} : std::vector<double>{1}) {
        const double v = m * std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) t.push_back(v);
      }
    return t;
  }
  const double raw = (hi - lo) / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
  return t;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series, bool logx, bool logy) {
  const double W = 640, H = 440, ml = 70, mr = 170, mt = 40, mb = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) throw InputError("plot: no finite data");
  auto pad = [](double& a, double& b, bool log) {
    if (log) {
      if (b / a < 1.5) {
        a /= 1.25;
        b *= 1.25;
      }
      const double f = std::pow(b / a, 0.05);
      a /= f;
      b *= f;
    } else {
      const double d = b > a ? 0.05 * (b - a) : std::max(1e-12, 0.05 * std::abs(a) + 1e-12);
      a -= d;
      b += d;
    }
  };
  pad(x0, x1, logx);
  pad(y0, y1, logy);
  auto map = [](double v, double a, double b, bool log) {
    return log ? (std::log(v) - std::log(a)) / (std::log(b) - std::log(a)) : (v - a) / (b - a);
  };
  auto px = [&](double v) { return ml + (W - ml - mr) * map(v, x0, x1, logx); };
  auto py = [&](double v) { return H - mb - (H - mt - mb) * map(v, y0, y1, logy); };
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(title) << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (W - ml - mr) << "\" height=\"" << (H - mt - mb)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(x0, x1, logx)) {
    o << "<line x1=\"" << px(t) << "\" y1=\"" << (H - mb) << "\" x2=\"" << px(t) << "\" y2=\"" << (H - mb + 5)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(t) << "\" y=\"" << (H - mb + 18) << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  for (double t : ticks(y0, y1, logy)) {
    o << "<line x1=\"" << (ml - 5) << "\" y1=\"" << py(t) << "\" x2=\"" << ml << "\" y2=\"" << py(t)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << (ml - 8) << "\" y=\"" << (py(t) + 4) << "\" text-anchor=\"end\">" << t << "</text>\n";
  }
  o << "<text x=\"" << (ml + (W - ml - mr) / 2) << "\" y=\"" << (H - 15) << "\" text-anchor=\"middle\">"
    << xml_escape(xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << (mt + (H - mt - mb) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = kColors[k % (sizeof kColors / sizeof *kColors)];
    if (s.line) {
      o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-dasharray=\"6 3\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i]) && (!logy || s.y[i] > 0)) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
      o << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i]) && (!logy || s.y[i] > 0))
          o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    }
    const double ly = mt + 10 + 18 * k, lx = W - mr + 12;
    if (s.line)
      o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << (lx + 22) << "\" y2=\"" << ly << "\" stroke=\""
        << c << "\" stroke-dasharray=\"6 3\"/>\n";
    else
      o << "<circle cx=\"" << (lx + 11) << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    o << "<text x=\"" << (lx + 28) << "\" y=\"" << (ly + 4) << "\">" << xml_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> emit_plots(const SweepResult& r, const std::string& out) {
  std::vector<const SweepRow*> ok;
  for (const auto& row : r.rows)
    if (row.ok()) ok.push_back(&row);
  if (ok.empty()) throw InputError("emit_plots: no completed rows");
  double lo = ok.front()->Ra, hi = lo;
  std::vector<double> prs;
  for (auto* row : ok) {
    lo = std::min(lo, row->Ra);
    hi = std::max(hi, row->Ra);
    if (std::none_of(prs.begin(), prs.end(), [&](double v) { return same_pr(v, row->Pr); })) prs.push_back(row->Pr);
  }
  std::sort(prs.begin(), prs.end());
  if (hi / lo < 10.0) {
    lo /= 2.0;
    hi *= 2.0;
  }
  lo = std::max(lo, 2.0);  // ln Ra > 0 on the guide grid
  const int ng = 41;
  std::vector<double> gra(ng), g_high(ng);
  for (int i = 0; i < ng; ++i) {
    gra[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (ng - 1));
    g_high[i] = std::cbrt(gra[i] * std::log(gra[i]));
  }

  std::vector<PlotSeries> series;
  nlohmann::json j;
  j["guide_ra"] = gra;
  j["guide_ra_ln_ra_third"] = g_high;
  j["guide_ra_ln_ra_over_pr_half"] = nlohmann::json::array();
  for (double pr : prs) {
    PlotSeries pts;
    pts.label = "Nu, Pr = " + fmt12(pr);
    for (auto* row : ok)
      if (same_pr(row->Pr, pr)) {
        pts.x.push_back(row->Ra);
        pts.y.push_back(row->nu_volume);
      }
    series.push_back(std::move(pts));
  }
  series.push_back({"(Ra ln Ra)^(1/3)", gra, g_high, true});
  for (double pr : prs) {
    std::vector<double> g(ng);
    for (int i = 0; i < ng; ++i) g[i] = std::sqrt(gra[i] * std::log(gra[i]) / pr);
    j["guide_ra_ln_ra_over_pr_half"].push_back({{"Pr", pr}, {"values", g}});
    series.push_back({"(Ra ln Ra / Pr)^(1/2), Pr = " + fmt12(pr), gra, g, true});
  }
  j["points"] = nlohmann::json::array();
  for (auto* row : ok)
    j["points"].push_back({{"Ra", row->Ra},
                           {"Pr", row->Pr},
                           {"Nu", row->nu_volume},
                           {"branch", to_string(classify_branch(row->Ra, row->Pr))}});

  const std::string dir = out + "/plots";
  fs::create_directories(dir);
  const std::string svg = dir + "/nu_vs_ra.svg", csv = dir + "/nu_vs_ra.csv", js = dir + "/nu_vs_ra.json";
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << text;
  };
  write(svg, svg_plot("Nusselt number against Rayleigh number", "Ra", "Nu", series, true, true));
  std::string c = "Ra,Pr,Nu,branch\n";
  for (auto* row : ok)
    c += fmt12(row->Ra) + "," + fmt12(row->Pr) + "," + fmt12(row->nu_volume) + "," +
         to_string(classify_branch(row->Ra, row->Pr)) + "\n";
  write(csv, c);
  write(js, j.dump(2) + "\n");
  return {svg, csv, js};
}

StabilityScan stability_scan(const StabilityConfig& c) {
  StabilityScan s;
  SimParams p;
  p.Pr = c.Pr;
  for (int i = 0; i < c.scan_points; ++i) {
    p.Ra = c.ra_lo + (c.ra_hi - c.ra_lo) * i / (c.scan_points - 1);
    double k = 0.0;
    s.Ra.push_back(p.Ra);
    s.max_rate.push_back(max_growth_rate(p, &k, c.Nz));
    s.k_arg.push_back(k);
  }
  s.critical = find_critical_rayleigh(c.ra_lo, c.ra_hi, c.Pr, c.Nz);
  return s;
}

}  // namespace rbc::harness
