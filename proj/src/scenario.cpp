#include "freqmarket/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace freqmarket {

ScenarioError::ScenarioError(const std::string& source, std::size_t line,
                             const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message) {}

Network NetworkDescription::build() const {
    NetworkSpec spec;
    spec.buses = buses;
    spec.edges = edges;
    spec.gamma = line_weights(edges, susceptance, voltage);
    spec.inertia = inertia;
    spec.damping = damping;
    spec.tree_edges = tree;
    return Network(std::move(spec));
}

void Scenario::validate() const {
    const std::size_t n = network.buses;
    const auto need = [&](const Vector& v, std::size_t len, const char* what) {
        if (static_cast<std::size_t>(v.size()) != len) {
            throw ScenarioError(std::string(what) + ": expected " + std::to_string(len) +
                                " values, got " + std::to_string(v.size()));
        }
    };
    if (static_cast<std::size_t>(network.voltage.size()) != n) {
        throw ScenarioError("voltage: expected " + std::to_string(n) + " values");
    }
    try {
        (void)network.build();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("network: ") + e.what());
    }
    if (costs.size() != n) throw ScenarioError("costs: expected one (q, c) pair per bus");
    need(load_mw, n, "load_mw");
    for (Eigen::Index i = 0; i < load_mw.size(); ++i) {
        if (!std::isfinite(load_mw[i]) || load_mw[i] < 0.0) {
            throw ScenarioError("load_mw: loads must be finite and nonnegative");
        }
    }
    try {
        gains.validate(n);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ScenarioError("t_end must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ScenarioError("dt must be positive");
    if (stride == 0) throw ScenarioError("stride must be at least 1");
    for (const auto& e : events.events()) {
        if (e.time < 0.0 || e.time >= t_end) {
            throw ScenarioError("event at t=" + std::to_string(e.time) + " lies outside [0, t_end)");
        }
        for (const auto& change : e.changes) {
            const std::size_t bus = std::visit([](const auto& c) { return c.bus; }, change);
            if (bus >= n) throw ScenarioError("event references bus " + std::to_string(bus + 1));
            if (const auto* load = std::get_if<LoadChange>(&change);
                load && (!std::isfinite(load->mw) || load->mw < 0.0)) {
                throw ScenarioError("event load must be finite and nonnegative");
            }
        }
    }
    if (initial_mode == InitialMode::Explicit) {
        if (!initial) throw ScenarioError("initial = explicit requires an [initial] section");
        need(initial->phi, n - 1, "initial phi");
        need(initial->omega, n, "initial omega");
        need(initial->bid, n, "initial bid");
        need(initial->p_gen_mw, n, "initial p_gen_mw");
        if (initial->bid.minCoeff() < 0.0 || initial->p_gen_mw.minCoeff() < 0.0) {
            throw ScenarioError("initial bids and setpoints must be nonnegative");
        }
    }
}

namespace {

struct Entry {
    std::string value;
    std::size_t line;
};

struct RawScenario {
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::vector<Entry> events;
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> tokens(const std::string& s) {
    std::string spaced = s;
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::istringstream in(spaced);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

class Reader {
public:
    Reader(std::string source, RawScenario raw) : source_(std::move(source)), raw_(std::move(raw)) {}

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        throw ScenarioError(source_, line, message);
    }

    double number(const std::string& token, std::size_t line) const {
        double v = 0.0;
        const char* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            fail(line, "not a number: '" + token + "'");
        }
        return v;
    }

    std::size_t index(const std::string& token, std::size_t line, std::size_t count,
                      const char* what) const {
        const double v = number(token, line);
        if (v != std::floor(v) || v < 1.0 || v > static_cast<double>(count)) {
            fail(line, std::string(what) + " '" + token + "' must be an integer in 1.." +
                           std::to_string(count));
        }
        return static_cast<std::size_t>(v) - 1;
    }

    const Entry* find(const std::string& section, const std::string& key) const {
        const auto s = raw_.sections.find(section);
        if (s == raw_.sections.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    const Entry& require(const std::string& section, const std::string& key) const {
        const Entry* e = find(section, key);
        if (!e) throw ScenarioError(source_ + ": [" + section + "] is missing '" + key + "'");
        return *e;
    }

    Vector vector(const Entry& e, std::size_t expected, const std::string& what,
                  bool broadcast = false) const {
        const auto parts = tokens(e.value);
        if (broadcast && parts.size() == 1) {
            return Vector::Constant(static_cast<Eigen::Index>(expected), number(parts[0], e.line));
        }
        if (parts.size() != expected) {
            fail(e.line, what + ": expected " + std::to_string(expected) + " values, got " +
                             std::to_string(parts.size()));
        }
        Vector v(static_cast<Eigen::Index>(expected));
        for (std::size_t i = 0; i < expected; ++i) v[static_cast<Eigen::Index>(i)] = number(parts[i], e.line);
        return v;
    }

    double scalar(const Entry& e, const std::string& what) const {
        const auto parts = tokens(e.value);
        if (parts.size() != 1) fail(e.line, what + ": expected a single value");
        return number(parts[0], e.line);
    }

    const RawScenario& raw() const { return raw_; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    RawScenario raw_;
};

const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"scenario", {"name"}},
        {"network", {"buses", "edges", "susceptance", "voltage", "inertia", "damping", "tree"}},
        {"costs", {"q", "c"}},
        {"gains", {"tau_b", "tau_g", "tau_lambda", "rho", "sigma"}},
        {"run", {"load_mw", "initial", "t_end", "dt", "stride"}},
        {"initial", {"phi", "delta", "omega", "bid", "p_gen_mw", "lambda"}},
        {"events", {}},
    };
    return keys;
}

RawScenario split(const std::string& text, const std::string& source) {
    RawScenario raw;
    std::istringstream in(text);
    std::string section;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const std::string content = trim(std::string_view(line).substr(0, line.find('#')));
        if (content.empty()) continue;
        if (content.front() == '[') {
            if (content.back() != ']') throw ScenarioError(source, line_no, "unterminated section header");
            section = trim(std::string_view(content).substr(1, content.size() - 2));
            if (!known_keys().contains(section)) {
                throw ScenarioError(source, line_no, "unknown section [" + section + "]");
            }
            if (raw.sections.contains(section) || (section == "events" && !raw.events.empty())) {
                throw ScenarioError(source, line_no, "duplicate section [" + section + "]");
            }
            raw.sections[section];
            continue;
        }
        if (section.empty()) throw ScenarioError(source, line_no, "content before the first section");
        if (section == "events") {
            raw.events.push_back({content, line_no});
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ScenarioError(source, line_no, "expected 'key = value'");
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const auto& allowed = known_keys().at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ScenarioError(source, line_no, "unknown key '" + key + "' in [" + section + "]");
        }
        auto& entries = raw.sections[section];
        if (entries.contains(key)) throw ScenarioError(source, line_no, "duplicate key '" + key + "'");
        entries[key] = {trim(std::string_view(content).substr(eq + 1)), line_no};
    }
    return raw;
}

NetworkDescription read_network(const Reader& r) {
    NetworkDescription net;
    const Entry& buses = r.require("network", "buses");
    const double nb = r.scalar(buses, "buses");
    if (nb != std::floor(nb) || nb < 2.0) r.fail(buses.line, "buses must be an integer >= 2");
    net.buses = static_cast<std::size_t>(nb);

    const Entry& edges = r.require("network", "edges");
    for (const auto& t : tokens(edges.value)) {
        const auto dash = t.find('-');
        if (dash == std::string::npos) r.fail(edges.line, "edge '" + t + "' must look like 'i-j'");
        const std::size_t i = r.index(t.substr(0, dash), edges.line, net.buses, "bus");
        const std::size_t j = r.index(t.substr(dash + 1), edges.line, net.buses, "bus");
        if (i == j) r.fail(edges.line, "edge '" + t + "' is a self-loop");
        net.edges.push_back({i, j});
    }
    if (net.edges.empty()) r.fail(edges.line, "at least one edge is required");
    net.susceptance = r.vector(r.require("network", "susceptance"), net.edges.size(), "susceptance");
    net.voltage = r.vector(r.require("network", "voltage"), net.buses, "voltage", true);
    net.inertia = r.vector(r.require("network", "inertia"), net.buses, "inertia", true);
    net.damping = r.vector(r.require("network", "damping"), net.buses, "damping", true);
    if (const Entry* tree = r.find("network", "tree")) {
        for (const auto& t : tokens(tree->value)) {
            net.tree.push_back(r.index(t, tree->line, net.edges.size(), "tree edge"));
        }
    }
    return net;
}

void read_events(const Reader& r, std::size_t buses, Scenario& s) {
    for (const auto& e : r.raw().events) {
        const auto parts = tokens(e.value);
        if (parts.size() < 2) r.fail(e.line, "event needs '<time> <load|cost> ...'");
        const double time = r.number(parts[0], e.line);
        if (time < 0.0) r.fail(e.line, "event time must be nonnegative");
        if (parts[1] == "load") {
            if (parts.size() != 4) r.fail(e.line, "load event: '<time> load <bus> <MW>'");
            const double mw = r.number(parts[3], e.line);
            if (mw < 0.0) r.fail(e.line, "load must be nonnegative");
            s.events.add(time, LoadChange{r.index(parts[2], e.line, buses, "bus"), mw});
        } else if (parts[1] == "cost") {
            if (parts.size() != 5) r.fail(e.line, "cost event: '<time> cost <bus> <q> <c>'");
            try {
                s.events.add(time, CostChange{r.index(parts[2], e.line, buses, "bus"),
                                              QuadraticCost(r.number(parts[3], e.line),
                                                            r.number(parts[4], e.line))});
            } catch (const std::invalid_argument& ex) {
                r.fail(e.line, ex.what());
            }
        } else {
            r.fail(e.line, "unknown event kind '" + parts[1] + "'");
        }
        if (time >= s.t_end) {
            r.fail(e.line, "event time " + parts[0] + " is not before t_end");
        }
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
    const Reader r(source, split(text, source));
    Scenario s;
    if (const Entry* name = r.find("scenario", "name")) s.name = name->value;

    s.network = read_network(r);
    const std::size_t n = s.network.buses;

    const Vector q = r.vector(r.require("costs", "q"), n, "q");
    const Vector c = r.vector(r.require("costs", "c"), n, "c");
    std::vector<QuadraticCost> costs;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            costs.emplace_back(q[static_cast<Eigen::Index>(i)], c[static_cast<Eigen::Index>(i)]);
        } catch (const std::invalid_argument& e) {
            r.fail(r.require("costs", "q").line, "bus " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    s.costs = CostProfile(std::move(costs));

    s.gains = Gains::defaults(n);
    if (const Entry* e = r.find("gains", "tau_b")) s.gains.tau_b = r.vector(*e, n, "tau_b", true);
    if (const Entry* e = r.find("gains", "tau_g")) s.gains.tau_g = r.vector(*e, n, "tau_g", true);
    if (const Entry* e = r.find("gains", "tau_lambda")) s.gains.tau_lambda = r.scalar(*e, "tau_lambda");
    if (const Entry* e = r.find("gains", "rho")) s.gains.rho = r.scalar(*e, "rho");
    if (const Entry* e = r.find("gains", "sigma")) s.gains.sigma = r.scalar(*e, "sigma");

    s.load_mw = r.vector(r.require("run", "load_mw"), n, "load_mw");
    s.t_end = r.scalar(r.require("run", "t_end"), "t_end");
    if (const Entry* e = r.find("run", "dt")) s.dt = r.scalar(*e, "dt");
    if (const Entry* e = r.find("run", "stride")) {
        const double stride = r.scalar(*e, "stride");
        if (stride != std::floor(stride) || stride < 1.0) r.fail(e->line, "stride must be a positive integer");
        s.stride = static_cast<std::size_t>(stride);
    }
    if (const Entry* e = r.find("run", "initial")) {
        if (e->value == "steady-state") {
            s.initial_mode = InitialMode::SteadyState;
        } else if (e->value == "explicit") {
            s.initial_mode = InitialMode::Explicit;
        } else {
            r.fail(e->line, "initial must be 'steady-state' or 'explicit'");
        }
    }
    if (r.raw().sections.contains("initial")) {
        InitialCondition ic;
        const Entry* phi = r.find("initial", "phi");
        const Entry* delta = r.find("initial", "delta");
        if ((phi == nullptr) == (delta == nullptr)) {
            throw ScenarioError(source + ": [initial] needs exactly one of 'phi' or 'delta'");
        }
        if (phi) {
            ic.phi = r.vector(*phi, n - 1, "phi");
        } else {
            const Vector d = r.vector(*delta, n, "delta");
            try {
                ic.phi = s.network.build().phi_from_delta(d);
            } catch (const std::invalid_argument& ex) {
                r.fail(delta->line, ex.what());
            }
        }
        ic.omega = r.vector(r.require("initial", "omega"), n, "omega", true);
        ic.bid = r.vector(r.require("initial", "bid"), n, "bid", true);
        ic.p_gen_mw = r.vector(r.require("initial", "p_gen_mw"), n, "p_gen_mw", true);
        ic.lambda = r.scalar(r.require("initial", "lambda"), "lambda");
        s.initial = std::move(ic);
    }
    read_events(r, n, s);
    try {
        s.validate();
    } catch (const ScenarioError& e) {
        throw ScenarioError(source + ": " + e.what());
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::string join(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

std::string dump_scenario(const Scenario& s) {
    std::ostringstream out;
    if (!s.name.empty()) out << "[scenario]\nname = " << s.name << "\n\n";
    out << "[network]\nbuses = " << s.network.buses << "\nedges =";
    for (const auto& e : s.network.edges) out << ' ' << e.from + 1 << '-' << e.to + 1;
    out << "\nsusceptance = " << join(s.network.susceptance)
        << "\nvoltage = " << join(s.network.voltage) << "\ninertia = " << join(s.network.inertia)
        << "\ndamping = " << join(s.network.damping) << '\n';
    if (!s.network.tree.empty()) {
        out << "tree =";
        for (std::size_t k : s.network.tree) out << ' ' << k + 1;
        out << '\n';
    }
    out << "\n[costs]\nq = " << join(s.costs.curvatures())
        << "\nc = " << join(s.costs.linear_coefficients()) << '\n';
    out << "\n[gains]\ntau_b = " << join(s.gains.tau_b) << "\ntau_g = " << join(s.gains.tau_g)
        << "\ntau_lambda = " << fmt(s.gains.tau_lambda) << "\nrho = " << fmt(s.gains.rho)
        << "\nsigma = " << fmt(s.gains.sigma) << '\n';
    out << "\n[run]\nload_mw = " << join(s.load_mw) << "\ninitial = "
        << (s.initial_mode == InitialMode::SteadyState ? "steady-state" : "explicit")
        << "\nt_end = " << fmt(s.t_end) << "\ndt = " << fmt(s.dt) << "\nstride = " << s.stride
        << '\n';
    if (s.initial) {
        out << "\n[initial]\nphi = " << join(s.initial->phi) << "\nomega = " << join(s.initial->omega)
            << "\nbid = " << join(s.initial->bid) << "\np_gen_mw = " << join(s.initial->p_gen_mw)
            << "\nlambda = " << fmt(s.initial->lambda) << '\n';
    }
    if (!s.events.empty()) {
        out << "\n[events]\n";
        for (const auto& e : s.events.events()) {
            for (const auto& change : e.changes) {
                out << fmt(e.time);
                if (const auto* load = std::get_if<LoadChange>(&change)) {
                    out << " load " << load->bus + 1 << ' ' << fmt(load->mw) << '\n';
                } else {
                    const auto& cost = std::get<CostChange>(change);
                    out << " cost " << cost.bus + 1 << ' ' << fmt(cost.cost.q()) << ' '
                        << fmt(cost.cost.c()) << '\n';
                }
            }
        }
    }
    return out.str();
}

Scenario resolve_scenario(const std::string& name_or_path) {
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        return builtin_scenario(name_or_path);
    }
    return load_scenario(name_or_path);
}

}  // namespace freqmarket
