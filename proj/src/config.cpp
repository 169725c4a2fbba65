#include "metapop/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metapop {

namespace {

const char* kKnownKeys[] = {
    "dimension", "domain.kind", "domain.lo", "domain.hi", "domain.centers", "domain.radii",
    "e.kind", "e.params", "e.bounds", "e.lipschitz",
    "a.kind", "a.params", "a.bounds", "a.lipschitz",
    "sigma.kind", "sigma.params", "sigma.bounds", "sigma.lipschitz",
    "kernel.kind", "kernel.params", "kernel.c_max",
    "r", "rho.lipschitz", "f.kind",
    "n", "replicates", "seed", "threads", "out",
    "theta.center", "theta.radius", "alpha1", "alpha2", "beta", "beta_prime", "m",
    "grid.step", "quad.radial", "quad.angular", "quad.volume",
    "persist.equilibria", "ode.horizon", "ode.checkpoints", "patches.file",
    "scaling.n_seq", "scaling.r_seq", "scaling.gamma1", "scaling.gamma2", "scaling.c2",
    "scaling.replicates",
    "concentration.t_grid", "concentration.z_grid", "concentration.replicates",
    "stochastic.n_seq", "stochastic.t_end", "stochastic.window", "stochastic.replicates",
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        cfg.entries_[key] = value;
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

void Config::apply_override(const std::string& kv) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must have the form key=value: " + kv);
    entries_[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + v);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer: " + v);
    }
}

long Config::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::istringstream in(get_string(key));
    std::vector<double> out;
    double x;
    while (in >> x) out.push_back(x);
    if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has no numeric values");
    return out;
}

std::vector<long> Config::get_longs(const std::string& key) const {
    std::istringstream in(get_string(key));
    std::vector<long> out;
    long x;
    while (in >> x) out.push_back(x);
    if (out.empty()) throw std::invalid_argument("config: key '" + key + "' has no integer values");
    return out;
}

void Config::check_keys() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : entries_) {
        bool known = false;
        for (const char* kk : kKnownKeys)
            if (k == kk) {
                known = true;
                break;
            }
        if (!known) unknown.push_back(k);
    }
    if (!unknown.empty()) {
        std::string msg = "config: unknown key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        msg += "; valid keys are:";
        for (const char* kk : kKnownKeys) msg += std::string(" ") + kk;
        throw std::invalid_argument(msg);
    }
}

void Config::write_manifest(const std::string& path, std::uint64_t seed) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << "version = " << version_string() << "\n";
    out << "seed = " << seed << "\n";
    for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
}

namespace {

Position to_position(const std::vector<double>& v) {
    Position p(v.size());
    for (size_t i = 0; i < v.size(); ++i) p(i) = v[i];
    return p;
}

ScalarField build_field(const Config& cfg, const std::string& name, const BoundingBox& bbox) {
    std::string kind = cfg.get_string(name + ".kind", "constant");
    std::vector<double> params = cfg.get_doubles(name + ".params");
    ScalarField f;
    if (kind == "constant") {
        if (params.size() != 1)
            throw std::invalid_argument("config: " + name + ".params: constant needs 1 value");
        f = ScalarField::constant(params[0]);
    } else if (kind == "affine") {
        if (params.size() != size_t(1 + bbox.lo.size()))
            throw std::invalid_argument("config: " + name + ".params: affine needs 1+d values");
        Position g(bbox.lo.size());
        for (int a = 0; a < g.size(); ++a) g(a) = params[1 + a];
        f = ScalarField::affine(params[0], g, bbox);
    } else if (kind == "bump") {
        if (params.size() != size_t(3 + bbox.lo.size()))
            throw std::invalid_argument("config: " + name + ".params: bump needs base amp center.. width");
        Position c(bbox.lo.size());
        for (int a = 0; a < c.size(); ++a) c(a) = params[2 + a];
        f = ScalarField::bump(params[0], params[1], c, params.back());
    } else {
        throw std::invalid_argument("config: " + name + ".kind must be constant, affine or bump");
    }
    if (cfg.has(name + ".bounds")) {
        auto b = cfg.get_doubles(name + ".bounds");
        if (b.size() != 2 || !(b[0] > 0) || !(b[0] <= b[1]))
            throw std::invalid_argument("config: " + name + ".bounds needs 0 < lo <= hi");
        f.lower = b[0];
        f.upper = b[1];
    }
    if (cfg.has(name + ".lipschitz")) f.lipschitz = cfg.get_double(name + ".lipschitz");
    return f;
}

Kernel build_kernel(const Config& cfg, int d) {
    std::string kind = cfg.get_string("kernel.kind", "uniform");
    std::vector<double> params = cfg.get_doubles("kernel.params");
    Kernel k;
    if (kind == "uniform") {
        k = Kernel::uniform(params.at(0));
    } else if (kind == "triangle") {
        k = Kernel::triangle(params.at(0));
    } else if (kind == "quartic") {
        k = Kernel::quartic(params.at(0));
    } else if (kind == "cosine") {
        k = Kernel::cosine(params.at(0));
    } else if (kind == "power_affine") {
        if (params.size() != size_t(2 + d))
            throw std::invalid_argument("config: kernel.params: power_affine needs c0 g0 g1..gd");
        Position g(d);
        for (int a = 0; a < d; ++a) g(a) = params[2 + a];
        k = Kernel::power_affine(params[0], params[1], g);
    } else {
        throw std::invalid_argument("config: kernel.kind must be uniform, triangle, quartic, cosine or power_affine");
    }
    if (cfg.has("kernel.c_max")) k.c_max = cfg.get_double("kernel.c_max");
    return k;
}

}  // namespace

std::shared_ptr<const Landscape> build_landscape(const Config& cfg) {
    cfg.check_keys();
    int d = static_cast<int>(cfg.get_long("dimension"));
    if (d < 1 || d > 3) throw std::invalid_argument("config: dimension must be 1, 2 or 3");

    std::string dk = cfg.get_string("domain.kind", "box");
    Domain domain = [&]() {
        if (dk == "box") {
            Position lo = to_position(cfg.get_doubles("domain.lo"));
            Position hi = to_position(cfg.get_doubles("domain.hi"));
            if (lo.size() != d || hi.size() != d)
                throw std::invalid_argument("config: domain.lo/hi must have 'dimension' entries");
            return Domain::box(lo, hi);
        }
        if (dk == "balls") {
            std::vector<double> cs = cfg.get_doubles("domain.centers");
            std::vector<double> rs = cfg.get_doubles("domain.radii");
            if (cs.size() != rs.size() * d)
                throw std::invalid_argument("config: domain.centers must list d coords per ball");
            Matrix centers(rs.size(), d);
            Vector radii(rs.size());
            for (size_t i = 0; i < rs.size(); ++i) {
                for (int a = 0; a < d; ++a) centers(i, a) = cs[i * d + a];
                radii(i) = rs[i];
            }
            return Domain::ball_union(centers, radii);
        }
        throw std::invalid_argument("config: domain.kind must be box or balls");
    }();

    BoundingBox bbox = domain.bounding_box();
    ScalarField e = build_field(cfg, "e", bbox);
    ScalarField a = build_field(cfg, "a", bbox);
    ScalarField sigma = build_field(cfg, "sigma", bbox);
    Kernel kernel = build_kernel(cfg, d);
    double r = cfg.get_double("r");

    QuadratureSpec quad;
    quad.radial = static_cast<int>(cfg.get_long("quad.radial", quad.radial));
    quad.angular = static_cast<int>(cfg.get_long("quad.angular", quad.angular));
    quad.volume = static_cast<int>(cfg.get_long("quad.volume", quad.volume));

    std::optional<double> L_rho;
    if (cfg.has("rho.lipschitz")) L_rho = cfg.get_double("rho.lipschitz");

    auto L = std::make_shared<Landscape>(
        make_landscape(std::move(domain), std::move(e), std::move(a), std::move(sigma),
                       std::move(kernel), r, quad, L_rho));
    return L;
}

ColonizationFunction build_colonization(const Config& cfg) {
    std::string kind = cfg.get_string("f.kind", "saturating");
    ColonizationFunction f;
    if (kind == "linear")
        f = ColonizationFunction::linear();
    else if (kind == "saturating")
        f = ColonizationFunction::saturating();
    else if (kind == "exponential")
        f = ColonizationFunction::exponential();
    else
        throw std::invalid_argument("config: f.kind must be linear, saturating or exponential");
    // Contract check (including f'(0) > 0): surfaces the validated reading of
    // the colonization assumptions at configuration time.
    f.validate();
    return f;
}

BoundSpec build_bound_spec(const Config& cfg) {
    BoundSpec spec;
    spec.theta_center = to_position(cfg.get_doubles("theta.center"));
    spec.theta_radius = cfg.get_double("theta.radius");
    spec.alpha1 = cfg.get_double("alpha1");
    std::string a2 = cfg.get_string("alpha2", "auto");
    spec.alpha2 = a2 == "auto" ? -1.0 : cfg.get_double("alpha2");
    spec.beta = cfg.get_double("beta");
    spec.beta_prime = cfg.get_double("beta_prime");
    std::string m = cfg.get_string("m", "auto");
    spec.m = m == "auto" ? -1.0 : cfg.get_double("m");
    if (spec.alpha2 > 0 && spec.alpha2 > spec.alpha1)
        throw std::invalid_argument("config: invariant alpha2 <= alpha1 violated");
    return spec;
}

ExperimentSetup build_experiment_setup(const Config& cfg) {
    ExperimentSetup s;
    s.landscape = build_landscape(cfg);
    s.f = build_colonization(cfg);
    s.spec = build_bound_spec(cfg);
    s.n = static_cast<int>(cfg.get_long("n"));
    s.replicates = static_cast<int>(cfg.get_long("replicates", 1));
    if (s.replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
    s.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    s.threads = static_cast<int>(cfg.get_long("threads", 0));
    s.out_dir = cfg.get_string("out", "");
    s.persist_equilibria = cfg.get_long("persist.equilibria", 1) != 0;
    std::string g = cfg.get_string("grid.step", "auto");
    s.grid_step = g == "auto" ? -1.0 : cfg.get_double("grid.step");
    return s;
}

}  // namespace metapop
