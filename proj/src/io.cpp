#include "hypocoerce/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace hypo {

using nlohmann::json;

namespace {

const json* child(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_real(const json& j, const char* key, const std::string& path, double fallback) {
  const json* v = child(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ValidationError(path, "expected a number");
  return v->get<double>();
}

long long get_int(const json& j, const char* key, const std::string& path, long long fallback) {
  const json* v = child(j, key);
  if (!v) return fallback;
  if (v->is_number_integer() || v->is_number_unsigned()) return v->get<long long>();
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (d == std::floor(d)) return static_cast<long long>(d);
  }
  throw ValidationError(path, "expected an integer");
}

std::string get_string(const json& j, const char* key, const std::string& path, const std::string& fallback) {
  const json* v = child(j, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ValidationError(path, "expected a string");
  return v->get<std::string>();
}

bool get_bool(const json& j, const char* key, const std::string& path, bool fallback) {
  const json* v = child(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ValidationError(path, "expected true or false");
  return v->get<bool>();
}

const json& section(const json& j, const char* key, const std::string& path) {
  static const json empty = json::object();
  const json* v = child(j, key);
  if (!v) return empty;
  if (!v->is_object()) throw ValidationError(path, "expected an object");
  return *v;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError("config", "expected a JSON object");
  RunConfig c;
  const json& pot = section(j, "potential", "potential");
  c.kind = potential_kind_from_string(get_string(pot, "kind", "potential.kind", "harmonic"));
  c.lambda = get_real(pot, "lambda", "potential.lambda", c.lambda);
  c.beta = get_real(pot, "beta", "potential.beta", c.beta);
  c.omega = get_real(pot, "omega", "potential.omega", c.omega);
  c.gamma = get_real(j, "gamma", "gamma", c.gamma);
  const json& grid = section(j, "grid", "grid");
  c.R = get_real(grid, "R", "grid.R", c.R);
  c.nx = get_int(grid, "nx", "grid.nx", c.nx);
  c.nv = get_int(j, "nv", "nv", c.nv);
  c.scheme = scheme_from_string(get_string(j, "scheme", "scheme", "mimetic"));
  const json& solver = section(j, "solver", "solver");
  c.rtol = get_real(solver, "rtol", "solver.rtol", c.rtol);
  c.max_iter = static_cast<int>(get_int(solver, "max_iter", "solver.max_iter", c.max_iter));
  {
    const long long s = get_int(solver, "seed", "solver.seed", static_cast<long long>(c.seed));
    if (s < 0) throw ValidationError("solver.seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  const json& ev = section(j, "evolve", "evolve");
  c.dt = get_real(ev, "dt", "evolve.dt", c.dt);
  c.T = get_real(ev, "T", "evolve.T", c.T);
  c.evolve_scheme = integrator_from_string(get_string(ev, "scheme", "evolve.scheme", "crank_nicolson"));
  c.record_every = get_real(ev, "record_every", "evolve.record_every", c.record_every);
  const json& init = section(j, "init", "init");
  c.init_kind = init_kind_from_string(get_string(init, "kind", "init.kind", "shifted_maxwellian"));
  const json& ip = section(init, "params", "init.params");
  c.init.x0 = get_real(ip, "x0", "init.params.x0", c.init.x0);
  c.init.v0 = get_real(ip, "v0", "init.params.v0", c.init.v0);
  c.init.sigma = get_real(ip, "sigma", "init.params.sigma", c.init.sigma);
  c.init.eta = get_real(ip, "eta", "init.params.eta", c.init.eta);
  c.init.mode = static_cast<int>(get_int(ip, "mode", "init.params.mode", c.init.mode));
  c.init.seed = static_cast<std::uint64_t>(get_int(ip, "seed", "init.params.seed", static_cast<long long>(c.seed)));
  const json& out = section(j, "outputs", "outputs");
  c.out_dir = get_string(out, "dir", "outputs.dir", c.out_dir);
  c.emit_operators = get_bool(out, "emit_operators", "outputs.emit_operators", c.emit_operators);

  const json& sw = section(j, "sweep", "sweep");
  auto real_list = [&](const char* key, std::vector<double>& dst) {
    const json* v = child(sw, key);
    if (!v) return;
    const std::string path = std::string("sweep.") + key;
    if (!v->is_array()) throw ValidationError(path, "expected an array");
    for (const json& e : *v) {
      if (!e.is_number()) throw ValidationError(path, "expected numbers");
      dst.push_back(e.get<double>());
    }
  };
  real_list("gamma", c.sweep_gamma);
  real_list("beta", c.sweep_beta);
  {
    std::vector<double> nxs;
    real_list("nx", nxs);
    for (double v : nxs) {
      if (v != std::floor(v)) throw ValidationError("sweep.nx", "expected integers");
      c.sweep_nx.push_back(static_cast<Index>(v));
    }
  }
  c.sweep_workers = static_cast<int>(get_int(sw, "workers", "sweep.workers", 0));
  validate_config(c);
  return c;
}

void validate_config(const RunConfig& c) {
  const Potential p = c.potential();
  if (!(c.gamma > 0.0)) throw ValidationError("gamma", "must be > 0");
  if (!(c.R > 0.0)) throw ValidationError("grid.R", "must be > 0");
  if (c.nx < 8) throw ValidationError("grid.nx", "must be >= 8");
  if (c.nv < 2) throw ValidationError("nv", "need at least 2 Hermite modes (collision operator degenerate)");
  if (std::max(std::exp(-0.5 * p.V(-c.R)), std::exp(-0.5 * p.V(c.R))) >= 1e-6)
    throw ValidationError("grid.R", "truncation radius too small (boundary weight >= 1e-6)");
  if (!(c.rtol > 0.0 && c.rtol <= 1e-8)) throw ValidationError("solver.rtol", "must lie in (0, 1e-8]");
  if (c.max_iter < 1) throw ValidationError("solver.max_iter", "must be >= 1");
  if (!(c.dt > 0.0)) throw ValidationError("evolve.dt", "must be > 0");
  if (!(c.T >= c.dt)) throw ValidationError("evolve.T", "must be >= evolve.dt");
  if (c.record_every < 0.0) throw ValidationError("evolve.record_every", "must be >= 0");
  if (c.evolve_scheme == Integrator::dense_expm && c.nx * c.nv > 2048)
    throw ValidationError("evolve.scheme", "dense_expm only for nx·nv <= 2048");
  if (c.init_kind == InitKind::shifted_maxwellian && !(c.init.sigma > 0.0))
    throw ValidationError("init.params.sigma", "must be > 0");
  if (c.init_kind == InitKind::mode_perturbation && (c.init.mode < 0 || c.init.mode >= c.nv))
    throw ValidationError("init.params.mode", "must lie in [0, nv)");
  if (c.out_dir.empty()) throw ValidationError("outputs.dir", "must not be empty");
  for (double g : c.sweep_gamma)
    if (!(g > 0.0)) throw ValidationError("sweep.gamma", "entries must be > 0");
  for (double b : c.sweep_beta) {
    if (!(b >= 0.0)) throw ValidationError("sweep.beta", "entries must be >= 0");
    if (b > 0.0 && c.kind == PotentialKind::harmonic)
      throw ValidationError("sweep.beta", "nonzero beta needs potential.kind = harmonic_cosine");
  }
  for (Index n : c.sweep_nx)
    if (n < 8) throw ValidationError("sweep.nx", "entries must be >= 8");
  if (c.sweep_workers < 0) throw ValidationError("sweep.workers", "must be >= 0");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("config", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["potential"] = {{"kind", std::string(to_string(c.kind))}, {"lambda", c.lambda}, {"beta", c.beta}, {"omega", c.omega}};
  j["gamma"] = c.gamma;
  j["grid"] = {{"R", c.R}, {"nx", c.nx}};
  j["nv"] = c.nv;
  j["scheme"] = std::string(to_string(c.scheme));
  j["solver"] = {{"rtol", c.rtol}, {"max_iter", c.max_iter}, {"seed", c.seed}};
  j["evolve"] = {{"dt", c.dt}, {"T", c.T}, {"scheme", std::string(to_string(c.evolve_scheme))},
                 {"record_every", c.record_every}};
  j["init"] = {{"kind", std::string(to_string(c.init_kind))},
               {"params", {{"x0", c.init.x0}, {"v0", c.init.v0}, {"sigma", c.init.sigma}, {"eta", c.init.eta},
                           {"mode", c.init.mode}, {"seed", c.init.seed}}}};
  j["outputs"] = {{"dir", c.out_dir}, {"emit_operators", c.emit_operators}};
  if (!c.sweep_gamma.empty() || !c.sweep_beta.empty() || !c.sweep_nx.empty())
    j["sweep"] = {{"gamma", c.sweep_gamma}, {"beta", c.sweep_beta}, {"nx", c.sweep_nx}, {"workers", c.sweep_workers}};
  return j;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string certificate_json(const Certificate& c) {
  // JSON has no NaN/Inf; the chain never produces them for a valid certificate.
  auto num = [](double x) { return std::isfinite(x) ? format_real(x) : std::string("null"); };
  std::ostringstream os;
  os << "{\n";
  os << "  \"alpha\": " << num(c.alpha) << ",\n";
  os << "  \"tau\": " << num(c.tau) << ",\n";
  os << "  \"gamma\": " << num(c.gamma) << ",\n";
  os << "  \"normL_num\": " << num(c.normL_num) << ",\n";
  os << "  \"normA_num\": " << num(c.normA_num) << ",\n";
  os << "  \"boundL\": " << num(c.boundL) << ",\n";
  os << "  \"boundA\": " << num(c.boundA) << ",\n";
  os << "  \"epsilon\": " << num(c.epsilon) << ",\n";
  os << "  \"C\": " << num(c.C) << ",\n";
  os << "  \"delta\": " << num(c.delta) << ",\n";
  os << "  \"A_const\": " << num(c.A_const) << ",\n";
  os << "  \"prefactor\": " << num(c.prefactor) << ",\n";
  os << "  \"decay_rate\": " << num(c.decay_rate) << ",\n";
  os << "  \"lambda_min_verified\": " << num(c.lambda_min_verified) << ",\n";
  os << "  \"verified\": " << (c.verified ? "true" : "false") << "\n";
  os << "}\n";
  return os.str();
}

void write_trace_csv(const DecayTrace& trace, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "t,dev,entropy,envelope,mass\n";
  for (const TraceRow& r : trace.rows)
    os << format_real(r.t) << ',' << format_real(r.dev) << ','
       << (trace.entropy_valid ? format_real(r.entropy) : std::string("nan")) << ',' << format_real(r.envelope)
       << ',' << format_real(r.mass) << '\n';
}

std::filesystem::path fresh_output_dir(const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  fs::path p = base;
  if (fs::exists(p)) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    p = base.string() + "_" + stamp;
    for (int k = 2; fs::exists(p); ++k) p = base.string() + "_" + stamp + "_" + std::to_string(k);
  }
  fs::create_directories(p);
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
}

}  // namespace hypo
