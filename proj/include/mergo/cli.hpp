#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mergo/arith.hpp"
#include "mergo/ergodic.hpp"
#include "mergo/error.hpp"
#include "mergo/gvnt.hpp"
#include "mergo/norms.hpp"
#include "mergo/polyfam.hpp"
#include "mergo/sieve_decomp.hpp"

namespace mergo::cli {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

// Malformed invocation or configuration (exit 2).
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Payload {
  bool csv = false;
  std::string text;
};

// Seeded generator with a portable mapping to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform() { return double(g_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return g_(); }

 private:
  std::mt19937_64 g_;
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    auto a = cur.find_first_not_of(" \t"), b = cur.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw usage_error("");
    return v;
  } catch (...) {
    throw usage_error("bad number for " + what + ": '" + s + "'");
  }
}

inline std::int64_t to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw usage_error("");
    return v;
  } catch (...) {
    throw usage_error("bad integer for " + what + ": '" + s + "'");
  }
}

// key=value pairs separated by commas
inline std::map<std::string, std::string> key_values(const std::string& s) {
  std::map<std::string, std::string> kv;
  for (const auto& part : split(s, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw usage_error("expected key=value in '" + s + "'");
    kv[part.substr(0, eq)] = part.substr(eq + 1);
  }
  return kv;
}

inline std::vector<IntPoly> parse_poly_list(const std::string& s) {
  std::vector<IntPoly> ps;
  for (const auto& t : split(s, ',')) {
    if (t.empty()) throw usage_error("empty polynomial in '" + s + "'");
    try {
      ps.push_back(parse_poly(t));
    } catch (const domain_error& e) {
      throw usage_error(e.what());
    }
  }
  if (ps.empty()) throw usage_error("no polynomials given");
  return ps;
}

// Prime-power values v_1, v_2, ... for g(p^e) independent of p; the last value repeats.
inline MultiplicativeSpec custom_spec(const std::string& list) {
  std::vector<double> v;
  for (const auto& t : split(list, ',')) v.push_back(to_double(t, "--custom"));
  if (v.empty()) throw usage_error("--custom needs at least one value");
  double C = 0;
  for (std::size_t e = 1; e <= 64; ++e) {
    double a = std::abs(v[std::min(e, v.size()) - 1]);
    if (a > 1) C = std::max(C, std::log(a) / std::log(double(e + 1)));
  }
  bool integral = std::all_of(v.begin(), v.end(), [](double x) { return x == std::nearbyint(x) && std::abs(x) < 1e15; });
  MultiplicativeSpec s;
  s.name = "custom";
  s.value = [v](std::uint64_t, int e) { return e == 0 ? cplx(1.0) : cplx(v[std::min<std::size_t>(e, v.size()) - 1]); };
  s.divisor_bound_C = C * (1 + 1e-12);
  if (integral)
    s.exact = [v](std::uint64_t, int e) -> std::int64_t {
      return e == 0 ? 1 : std::int64_t(v[std::min<std::size_t>(e, v.size()) - 1]);
    };
  return s;
}

inline std::optional<MultiplicativeSpec> named_function(const std::string& name) {
  if (name == "mobius") return spec::mobius();
  if (name == "liouville") return spec::liouville();
  if (name == "divisor") return spec::divisor();
  return std::nullopt;
}

inline bool source_is_random(const std::string& src) { return src == "random" || src == "random_sign"; }

// mobius | liouville | divisor | one | phase:c1=..,c2=.. | file:PATH |
// decomposed:FN.g1 | decomposed:FN.g2 | random | random_sign, on [1, N].
inline ArithSeq make_source(const std::string& src, std::int64_t N, std::optional<std::uint64_t> seed) {
  if (N < 1) throw domain_error("source: N must be >= 1");
  if (N > 200'000'000) throw size_error("source: N too large");
  if (auto f = named_function(src)) return sieve_multiplicative(*f, std::uint64_t(N));
  if (src == "one") return ArithSeq::integral(1, std::vector<std::int64_t>(std::size_t(N), 1));
  if (source_is_random(src)) {
    if (!seed) throw usage_error("--seed is required for random sources");
    Rng rng(*seed);
    if (src == "random") return ArithSeq::tabulate(1, N, [&](std::int64_t) { return e(rng.uniform()); });
    std::vector<std::int64_t> v(static_cast<std::size_t>(N));
    for (auto& x : v) x = (rng.next() >> 63) ? 1 : -1;
    return ArithSeq::integral(1, std::move(v));
  }
  if (src.rfind("phase:", 0) == 0) {
    auto kv = key_values(src.substr(6));
    std::vector<long double> c;
    for (const auto& [k, v] : kv) {
      if (k.size() < 2 || k[0] != 'c') throw usage_error("phase coefficients are named c1, c2, ...");
      auto j = std::size_t(to_int(k.substr(1), "phase index"));
      if (j < 1 || j > 8) throw usage_error("phase index out of range");
      if (c.size() < j) c.resize(j, 0.0L);
      c[j - 1] = to_double(v, k);
    }
    return ArithSeq::tabulate(1, N, [&](std::int64_t n) {
      long double t = 0, np = 1;
      for (auto cj : c) {
        np *= (long double)n;
        long double v = cj * np;
        t += v - std::floor(v);
      }
      return e(double(t - std::floor(t)));
    });
  }
  if (src.rfind("file:", 0) == 0) {
    std::ifstream in(src.substr(5));
    if (!in) throw usage_error("cannot open " + src.substr(5));
    std::string line;
    std::getline(in, line);
    if (line != "n,value_re,value_im") throw usage_error("file source needs header n,value_re,value_im");
    std::vector<cplx> v(static_cast<std::size_t>(N));
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split(line, ',');
      if (f.size() != 3) throw usage_error("bad row in " + src.substr(5));
      auto n = to_int(f[0], "n");
      if (n >= 1 && n <= N) v[std::size_t(n - 1)] = cplx(to_double(f[1], "value_re"), to_double(f[2], "value_im"));
    }
    return ArithSeq(1, std::move(v));
  }
  if (src.rfind("decomposed:", 0) == 0) {
    auto rest = src.substr(11);
    auto dot = rest.rfind('.');
    if (dot == std::string::npos) throw usage_error("decomposed source needs FN.g1 or FN.g2");
    auto f = named_function(rest.substr(0, dot));
    auto part = rest.substr(dot + 1);
    if (!f || (part != "g1" && part != "g2")) throw usage_error("unknown decomposed source '" + src + "'");
    auto dec = sw_decompose(sieve_multiplicative(*f, std::uint64_t(N)));
    return part == "g1" ? dec.g1 : dec.g2;
  }
  throw usage_error("unknown source '" + src + "'");
}

inline Payload json_payload(const json& j) { return {false, j.dump(2) + "\n"}; }

inline std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Temp file in the target directory, then rename.
inline void write_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw usage_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw usage_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

struct Command {
  std::string name;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::function<Payload()> run;
};

namespace detail {

inline void add_common(CLI::App* sub, Command& c) {
  sub->add_option("--out", c.out, "output file (written atomically)");
  sub->add_option("--seed", c.seed, "64-bit seed for randomized runs");
}

inline void guard_s(int s) {
  if (s > 4) throw cost_error("s must be <= 4");
  if (s < 1) throw domain_error("s must be >= 1");
}

inline json type_json(const TypeVector& t) { return json{{"d", t.d}, {"w", t.w}}; }

}  // namespace detail

// All commands share these parameter holders; only the chosen subcommand's are read.
struct Params {
  std::string fn = "mobius", custom, method = "naive", polys, h = "symbolic", mode, theta = "mobius", f = "ones",
              sweep, dump, system, schedule, obs, manifest, outdir = ".", summary;
  std::int64_t n = 64, J = 0, points = 64, u3_length = 128;
  int s = 0;
  double A = 0, alpha = 0, beta = 0, eta = 0, C = 1, r = 1;
  std::optional<double> certified;
  bool n_set = false;
};

inline Payload cmd_sieve(const Params& p) {
  if (p.n > 100'000'000) throw cost_error("sieve: CSV output limited to n <= 1e8");
  ArithSeq g;
  if (p.fn == "custom") {
    if (p.custom.empty()) throw usage_error("--fn custom needs --custom v1,v2,...");
    g = sieve_multiplicative(custom_spec(p.custom), std::uint64_t(std::max<std::int64_t>(p.n, 1)));
  } else {
    auto f = named_function(p.fn);
    if (!f) throw usage_error("sieve: --fn must be mobius, liouville, divisor or custom");
    if (p.n < 1) throw domain_error("sieve: n must be >= 1");
    g = sieve_multiplicative(*f, std::uint64_t(p.n));
  }
  std::string out = "n,value_re,value_im\n";
  out.reserve(std::size_t(p.n) * 12);
  for (std::int64_t n = 1; n <= p.n; ++n) {
    auto v = g(n);
    out += std::to_string(n) + "," + fmt(v.real()) + "," + fmt(v.imag()) + "\n";
  }
  return {true, std::move(out)};
}

inline Payload cmd_swcheck(const Params& p, std::optional<std::uint64_t> seed) {
  if (p.n < 3) throw domain_error("swcheck: n must be >= 3");
  ArithSeq g = p.fn == "custom" ? sieve_multiplicative(custom_spec(p.custom), std::uint64_t(p.n))
                                : make_source(p.fn, p.n, seed);
  auto r = sw_discrepancy(g, p.A);
  return json_payload(json{{"n", r.N}, {"A", r.A}, {"max", r.max_abs_progression_sum}, {"q", r.witness_q}, {"a", r.witness_a}});
}

inline Payload cmd_norm(const Params& p, std::optional<std::uint64_t> seed) {
  detail::guard_s(p.s);
  if (p.method != "naive" && p.method != "fft") throw usage_error("--method must be naive or fft");
  if (p.method == "fft" && p.s != 2) throw domain_error("norm: the fft method computes U^2 only");
  auto f = make_source(p.fn, p.n, seed);
  NormEstimate est = p.method == "fft" ? gowers_u2_fft(f, p.n) : gowers_norm(f, p.n, p.s);
  return json_payload(json{{"value", est.value}, {"kind", kind_name(est.kind)}, {"method", p.method}});
}

inline Payload cmd_unorm(const Params& p, std::optional<std::uint64_t> seed) {
  detail::guard_s(p.s);
  auto f = make_source(p.fn, p.n, seed);
  std::pair<NormEstimate, PhaseWitness> r =
      p.certified ? u_norm_certified(f, p.n, p.s, *p.certified) : u_norm_search(f, p.n, p.s);
  return json_payload(
      json{{"value", r.first.value}, {"kind", kind_name(r.first.kind)}, {"witness", r.second.coefficients}});
}

inline Payload cmd_vinogradov(const Params& p) {
  if (p.J > 10'000'000) throw cost_error("vinogradov: J too large");
  auto b = vinogradov_bump(p.alpha, p.beta, p.eta, int(p.J));
  std::string out = "j,c_re,c_im\n";
  for (int j = -int(p.J); j <= int(p.J); ++j) out += std::to_string(j) + "," + fmt(b.c(j).real()) + "," + fmt(b.c(j).imag()) + "\n";
  return {true, std::move(out)};
}

inline Payload cmd_pet(const Params& p) {
  if (p.polys.empty()) throw usage_error("pet: --polys is required");
  IntFamily F(parse_poly_list(p.polys));
  std::optional<std::int64_t> h;
  if (p.h != "symbolic") h = to_int(p.h, "--h");
  auto [s, tr] = required_s(F, h);
  json steps = json::array();
  for (const auto& st : tr.steps)
    steps.push_back(json{{"family", st.family},
                         {"q1", st.q1},
                         {"result", st.result},
                         {"type_before", detail::type_json(st.type_before)},
                         {"type_after", detail::type_json(st.type_after)}});
  return json_payload(json{{"family", F.strings()}, {"h", p.h}, {"steps", steps}, {"base_k", tr.base_k}, {"s", s}});
}

inline std::vector<ArithSeq> gvnt_functions(const Params& p, const CountingConfig& cfg,
                                            std::optional<std::uint64_t> seed) {
  std::size_t k = cfg.polys.size() + 1;
  if (double(cfg.M) * double(k) > 4e8) throw cost_error("gvnt: support too large");
  if (p.f == "ones") return std::vector<ArithSeq>(k, ArithSeq::tabulate(-cfg.M, cfg.M, [](std::int64_t) { return cplx(1.0); }));
  if (p.f != "random") throw usage_error("--f must be ones or random");
  if (!seed) throw usage_error("--seed is required for --f random");
  Rng rng(*seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<ArithSeq> fs;
  for (std::size_t i = 0; i < k; ++i)
    fs.push_back(ArithSeq::tabulate(-cfg.M, cfg.M, [&](std::int64_t) { return e(rng.uniform()); }));
  return fs;
}

inline GVNTReport gvnt_one(const Params& p, std::int64_t N, std::optional<std::uint64_t> seed) {
  auto polys = parse_poly_list(p.polys);
  if (p.mode == "u") {
    for (std::size_t i = 0; i < polys.size(); ++i) {
      if (polys[i].degree() < 1) throw domain_error("gvnt: polynomials must be nonconstant");
      if (i && polys[i].degree() <= polys[i - 1].degree())
        throw domain_error("gvnt --mode u: degrees must be strictly increasing");
    }
  } else if (p.mode != "U") {
    throw usage_error("--mode must be u or U");
  }
  auto cfg = make_config(polys, N, p.C);
  auto theta = make_source(p.theta, N, seed);
  auto fs = gvnt_functions(p, cfg, seed);
  return p.mode == "u" ? gvnt_u_report(theta, fs, cfg) : gvnt_U_report(theta, fs, cfg);
}

inline Payload cmd_gvnt(const Params& p, std::optional<std::uint64_t> seed) {
  if (p.polys.empty()) throw usage_error("gvnt: --polys is required");
  if (!p.sweep.empty()) {
    std::string out = "N,lhs,norm,ratio\n";
    for (const auto& t : split(p.sweep, ',')) {
      auto N = to_int(t, "--sweep");
      auto r = gvnt_one(p, N, seed);
      out += std::to_string(N) + "," + fmt(r.lhs) + "," + fmt(r.norm_value) + "," + fmt(r.ratio) + "\n";
    }
    return {true, std::move(out)};
  }
  auto r = gvnt_one(p, p.n, seed);
  auto cfg = make_config(parse_poly_list(p.polys), p.n, p.C);
  return json_payload(json{{"N", p.n},
                           {"M", cfg.M},
                           {"lhs", r.lhs},
                           {"lhs_theorem", r.lhs_theorem},
                           {"norm_value", r.norm_value},
                           {"norm_kind", r.norm_kind},
                           {"norm_estimate", r.norm_estimate},
                           {"s_or_d", r.s_or_d},
                           {"ratio", r.ratio}});
}

inline Payload cmd_decompose(const Params& p, std::optional<std::uint64_t> seed) {
  if (!p.n_set) throw usage_error("decompose: --n is required");
  auto g = make_source(p.fn, p.n, seed);
  if (g.start() != 1) throw domain_error("decompose: source must start at 1");
  auto dec = sw_decompose(g);
  if (p.u3_length < 1) throw domain_error("decompose: --u3-length must be >= 1");
  if (p.u3_length > 512) throw cost_error("decompose: --u3-length limited to 512");
  std::int64_t L = std::min<std::int64_t>(p.n, p.u3_length);
  auto u3 = u_norm_search(dec.g1, L, 3);
  if (!p.dump.empty()) {
    std::string csv = "n,g1_re,g1_im,g2_re,g2_im\n";
    for (std::int64_t n = 1; n <= p.n; ++n) {
      auto a = dec.g1(n), b = dec.g2(n);
      csv += std::to_string(n) + "," + fmt(a.real()) + "," + fmt(a.imag()) + "," + fmt(b.real()) + "," + fmt(b.imag()) + "\n";
    }
    write_atomic(p.dump, csv);
  }
  return json_payload(json{{"n", p.n},
                           {"r", p.r},
                           {"l1_distance", lr_distance(g, dec.g1, 1.0, p.n)},
                           {"lr_distance", lr_distance(g, dec.g1, p.r, p.n)},
                           {"g1_u3_lowerbound", u3.first.value},
                           {"u3_length", L}});
}

inline std::vector<std::int64_t> parse_schedule(const std::string& s) {
  if (s.rfind("lacunary:", 0) == 0) {
    auto kv = key_values(s.substr(9));
    for (const auto& [k, v] : kv)
      if (k != "eta" && k != "B" && k != "jmax") throw usage_error("unknown lacunary key '" + k + "'");
    double eta = kv.count("eta") ? to_double(kv["eta"], "eta") : 1.0;
    double B = kv.count("B") ? to_double(kv["B"], "B") : 40.0;
    std::int64_t jmax = kv.count("jmax") ? to_int(kv["jmax"], "jmax") : 60;
    return lacunary_schedule(eta, B, jmax).values;
  }
  if (s.rfind("list:", 0) == 0) {
    std::vector<std::int64_t> v;
    for (const auto& t : split(s.substr(5), ',')) v.push_back(to_int(t, "schedule"));
    return v;
  }
  throw usage_error("--schedule must be lacunary:eta=..,B=..,jmax=.. or list:N1,N2,...");
}

inline std::string series_csv(const std::vector<SeriesRow>& rows) {
  std::string out = "x,N,value_re,value_im\n";
  for (const auto& r : rows)
    out += std::to_string(r.point) + "," + std::to_string(r.N) + "," + fmt(r.value.real()) + "," + fmt(r.value.imag()) + "\n";
  return out;
}

inline Payload cmd_ergodic(const Params& p, std::optional<std::uint64_t> seed) {
  if (p.system.empty()) throw usage_error("ergodic: --system is required");
  if (p.schedule.empty()) throw usage_error("ergodic: --schedule is required");
  auto sched = parse_schedule(p.schedule);
  if (sched.empty()) throw domain_error("ergodic: empty schedule");
  std::int64_t Nmax = *std::max_element(sched.begin(), sched.end());
  if (*std::min_element(sched.begin(), sched.end()) < 1) throw domain_error("ergodic: schedule entries must be >= 1");
  auto theta = make_source(p.theta, Nmax, seed);
  auto colon = p.system.find(':');
  std::string kind = p.system.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : p.system.substr(colon + 1);
  std::int64_t freq = 1;
  if (!p.obs.empty()) {
    if (p.obs.rfind("char:", 0) != 0) throw usage_error("--obs must be char:K");
    freq = to_int(p.obs.substr(5), "--obs");
  }
  if (kind == "cyclic") {
    auto M = to_int(arg, "cyclic modulus");
    if (M < 1 || M > (1 << 24)) throw domain_error("ergodic: cyclic modulus out of range");
    auto sys = FiniteSystem::cyclic(std::uint32_t(M));
    auto polys = parse_poly_list(p.polys.empty() ? "y" : p.polys);
    FiniteObservable f(static_cast<std::size_t>(M));
    for (std::int64_t x = 0; x < M; ++x) f[std::size_t(x)] = e(double((freq * x) % M) / double(M));
    std::vector<std::uint32_t> pts(static_cast<std::size_t>(M));
    std::iota(pts.begin(), pts.end(), 0u);
    std::vector<FiniteObservable> fs(polys.size(), f);
    return {true, series_csv(convergence_experiment(sys, pts, theta, polys, fs, sched, p.A))};
  }
  if (kind == "torus") {
    std::vector<double> alpha;
    for (const auto& t : split(arg, ',')) alpha.push_back(to_double(t, "rotation"));
    if (alpha.empty()) throw usage_error("torus needs a rotation vector");
    TorusSystem sys(alpha.size(), {alpha});
    auto polys = parse_poly_list(p.polys.empty() ? "y" : p.polys);
    std::vector<std::int64_t> k(alpha.size(), 0);
    k[0] = freq;
    std::vector<TorusObservable> fs(polys.size(), TorusObservable::character(k));
    if (p.points < 1 || p.points > 4096) throw domain_error("ergodic: --points must be in [1, 4096]");
    auto pts = sys.sample_points(std::size_t(p.points));
    return {true, series_csv(convergence_experiment(sys, pts, theta, polys, fs, sched, p.A))};
  }
  if (kind == "product") {
    std::vector<std::uint32_t> Ms;
    for (const auto& t : split(arg, ',')) {
      auto m = to_int(t, "product modulus");
      if (m < 1 || m > (1 << 20)) throw domain_error("ergodic: product modulus out of range");
      Ms.push_back(std::uint32_t(m));
    }
    if (!p.polys.empty())
      for (const auto& P : parse_poly_list(p.polys))
        if (!(P == IntPoly::variable())) throw domain_error("ergodic: product systems use the linear iterates T_j^n");
    auto sys = FiniteSystem::product_cyclic(Ms);
    std::vector<FiniteObservable> fs;
    std::size_t stride = 1;
    for (auto m : Ms) {
      FiniteObservable f(sys.size());
      for (std::size_t x = 0; x < sys.size(); ++x)
        f[x] = e(double((std::uint64_t(freq) * ((x / stride) % m)) % m) / double(m));
      fs.push_back(std::move(f));
      stride *= m;
    }
    std::vector<std::uint32_t> pts(sys.size());
    std::iota(pts.begin(), pts.end(), 0u);
    return {true, series_csv(commuting_series(sys, pts, theta, fs, sched, p.A))};
  }
  throw usage_error("--system must be cyclic:M, torus:a1,..,ad or product:M1,..,Mk");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ManifestEntry {
  std::string command;
  json params = json::object();
  std::string out;
  std::optional<std::uint64_t> seed;
};

inline std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw usage_error(std::string("malformed manifest: ") + e.what());
  }
  if (!j.is_array()) throw usage_error("manifest must be a JSON array");
  std::vector<ManifestEntry> entries;
  for (const auto& e : j) {
    if (!e.is_object()) throw usage_error("manifest entries must be objects");
    ManifestEntry m;
    for (const auto& [k, v] : e.items()) {
      if (k == "command" && v.is_string()) m.command = v.get<std::string>();
      else if (k == "params" && v.is_object()) m.params = v;
      else if (k == "out" && v.is_string()) m.out = v.get<std::string>();
      else if (k == "seed" && v.is_number_unsigned()) m.seed = v.get<std::uint64_t>();
      else if (k == "seed" && v.is_number_integer() && v.get<std::int64_t>() >= 0) m.seed = v.get<std::uint64_t>();
      else throw usage_error("manifest: unknown or ill-typed key '" + k + "'");
    }
    if (m.command.empty()) throw usage_error("manifest: entry without command");
    if (m.command == "manifest") throw usage_error("manifest: nested manifests are not allowed");
    entries.push_back(std::move(m));
  }
  return entries;
}

inline std::vector<std::string> entry_argv(const ManifestEntry& m, const std::string& out) {
  std::vector<std::string> a{m.command};
  for (const auto& [k, v] : m.params.items()) {
    if (k == "out" || k == "seed") throw usage_error("manifest: give out and seed at entry level");
    if (v.is_boolean()) {
      if (v.get<bool>()) a.push_back("--" + k);
      continue;
    }
    a.push_back("--" + k);
    if (v.is_string()) {
      a.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      a.push_back(s);
    } else if (v.is_number()) {
      a.push_back(v.dump());
    } else {
      throw usage_error("manifest: unsupported value for '" + k + "'");
    }
  }
  a.push_back("--out");
  a.push_back(out);
  if (m.seed) {
    a.push_back("--seed");
    a.push_back(std::to_string(*m.seed));
  }
  return a;
}

inline int run_manifest(const Params& p, std::ostream& out, std::ostream& err) {
  std::ifstream in(p.manifest);
  if (!in) throw usage_error("cannot open manifest " + p.manifest);
  std::stringstream buf;
  buf << in.rdbuf();
  auto entries = parse_manifest(buf.str());
  std::string summary = "index,command,exit_code,out\n";
  int rc = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& m = entries[i];
    std::string rel = m.out;
    if (rel.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "%03zu_", i);
      rel = name + m.command + ".out";
    }
    std::string path = (std::filesystem::path(p.outdir) / rel).string();
    std::ostringstream sout;
    int code = dispatch(entry_argv(m, path), sout, err);
    summary += std::to_string(i) + "," + m.command + "," + std::to_string(code) + "," + rel + "\n";
    if (code == 0) write_atomic(path + ".envelope.json", sout.str());
    if (code != 0) {
      rc = code;
      break;
    }
  }
  if (p.summary.empty()) out << summary;
  else write_atomic(p.summary, summary);
  return rc;
}

// Returns the process exit code: 0 success, 2 usage, 3 domain, 4 cost guard.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical harnesses for weighted polynomial ergodic averages", "mergo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Params p;
  Command cmd;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    detail::add_common(s, cmd);
    return s;
  };

  auto* sieve = add("sieve", "tabulate a multiplicative function (CSV)");
  sieve->add_option("--fn", p.fn)->required();
  sieve->add_option("--n", p.n)->required();
  sieve->add_option("--custom", p.custom, "prime-power values v1,v2,... for --fn custom");

  auto* sw = add("swcheck", "Siegel-Walfisz progression maximum (JSON)");
  sw->add_option("--fn", p.fn);
  sw->add_option("--custom", p.custom);
  sw->add_option("--n", p.n)->required();
  sw->add_option("--A", p.A)->required();

  auto* norm = add("norm", "Gowers U^s norm (JSON)");
  norm->add_option("--fn", p.fn);
  norm->add_option("--n", p.n);
  norm->add_option("--s", p.s)->required();
  norm->add_option("--method", p.method);

  auto* unorm = add("unorm", "u^s norm: search lower bound or certified value (JSON)");
  unorm->add_option("--fn", p.fn);
  unorm->add_option("--n", p.n);
  unorm->add_option("--s", p.s)->required();
  unorm->add_option("--certified", p.certified, "certify to within EPS");

  auto* vino = add("vinogradov", "Fourier coefficients of the Vinogradov bump (CSV)");
  vino->add_option("--alpha", p.alpha)->required();
  vino->add_option("--beta", p.beta)->required();
  vino->add_option("--eta", p.eta)->required();
  vino->add_option("--J", p.J)->required();

  auto* pet = add("pet", "PET induction trace (JSON)");
  pet->set_help_flag("--help", "Print this help message and exit");
  pet->add_option("--polys", p.polys)->required();
  pet->add_option("--h", p.h, "symbolic or an integer shift");

  auto* gv = add("gvnt", "weighted counting operator against a uniformity norm (JSON, CSV with --sweep)");
  gv->add_option("--mode", p.mode)->required();
  gv->add_option("--polys", p.polys)->required();
  gv->add_option("--n", p.n);
  gv->add_option("--theta", p.theta);
  gv->add_option("--C", p.C);
  gv->add_option("--f", p.f, "ones or random");
  gv->add_option("--sweep", p.sweep, "N1,N2,...");

  auto* dec = add("decompose", "restriction to the (Q_n, R_n) window (JSON)");
  dec->add_option("--fn", p.fn);
  auto* nopt = dec->add_option("--n", p.n)->required();
  dec->add_option("--r", p.r);
  dec->add_option("--dump", p.dump, "CSV of g1, g2");
  dec->add_option("--u3-length", p.u3_length, "prefix length for the u^3 search on g1");

  auto* erg = add("ergodic", "weighted ergodic averages along a schedule (CSV)");
  erg->add_option("--system", p.system)->required();
  erg->add_option("--theta", p.theta);
  erg->add_option("--polys", p.polys);
  erg->add_option("--schedule", p.schedule)->required();
  erg->add_option("--A", p.A);
  erg->add_option("--obs", p.obs, "char:K");
  erg->add_option("--points", p.points, "torus sample size");

  auto* man = app.add_subcommand("manifest", "run a JSON manifest of commands");
  man->add_option("path", p.manifest)->required();
  man->add_option("--outdir", p.outdir);
  man->add_option("--summary", p.summary);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    return 2;
  }
  p.n_set = nopt->count() > 0;
  auto* chosen = app.get_subcommands().front();
  cmd.name = chosen->get_name();
  auto t0 = std::chrono::steady_clock::now();
  try {
    if (cmd.name == "manifest") return run_manifest(p, out, err);
    Payload pl;
    const auto& seed = cmd.seed;
    if (cmd.name == "sieve") pl = cmd_sieve(p);
    else if (cmd.name == "swcheck") pl = cmd_swcheck(p, seed);
    else if (cmd.name == "norm") pl = cmd_norm(p, seed);
    else if (cmd.name == "unorm") pl = cmd_unorm(p, seed);
    else if (cmd.name == "vinogradov") pl = cmd_vinogradov(p);
    else if (cmd.name == "pet") pl = cmd_pet(p);
    else if (cmd.name == "gvnt") pl = cmd_gvnt(p, seed);
    else if (cmd.name == "decompose") pl = cmd_decompose(p, seed);
    else if (cmd.name == "ergodic") pl = cmd_ergodic(p, seed);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cmd.out.empty()) {
      out << pl.text;
      return 0;
    }
    write_atomic(cmd.out, pl.text);
    json config{{"command", cmd.name}, {"args", args}};
    if (cmd.seed) config["seed"] = *cmd.seed;
    json env{{"tool_version", kToolVersion},
             {"config", config},
             {"timestamp", iso_now()},
             {"payload", json{{"format", pl.csv ? "csv" : "json"}, {"path", cmd.out}}},
             {"wall_time", wall}};
    out << env.dump(2) << "\n";
    return 0;
  } catch (const usage_error& e) {
    err << "usage: " << e.what() << "\n";
    return 2;
  } catch (const cost_error& e) {
    err << "cost guard: " << e.what() << "\n";
    return 4;
  } catch (const domain_error& e) {
    err << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mergo::cli
