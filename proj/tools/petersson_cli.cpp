// petersson: command-line front end.
// Settings come from an INI file (--config) and are overridden by flags; PETERSSON_WORKERS overrides the
// worker count from the file. Every output carries the tool version and a SHA-256 of the effective settings.

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "petersson/experiments.hpp"
#include "petersson/oracle.hpp"

using namespace petersson;
using json = nlohmann::ordered_json;

namespace {

const char* kVersion = "1.0.0";

// ---------- settings ----------

struct Settings {
    std::map<std::string, std::string> kv;                // "section.key" -> value
    mutable std::map<std::string, std::string> defaults;  // defaults actually consulted

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k, const std::string& def = "") const {
        auto it = kv.find(k);
        if (it != kv.end()) return it->second;
        if (!def.empty()) defaults[k] = def;
        return def;
    }
    long num(const std::string& k, long def) const {
        if (!has(k)) {
            defaults[k] = std::to_string(def);
            return def;
        }
        try {
            size_t pos;
            long v = std::stol(kv.at(k), &pos);
            if (pos != kv.at(k).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("setting '" + k + "' must be an integer, got '" + kv.at(k) + "'");
        }
    }
    double real(const std::string& k, double def) const {
        if (!has(k)) {
            defaults[k] = detail::fmt(def);
            return def;
        }
        try {
            size_t pos;
            double v = std::stod(kv.at(k), &pos);
            if (pos != kv.at(k).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("setting '" + k + "' must be a number, got '" + kv.at(k) + "'");
        }
    }
    long double ld(const std::string& k) const {
        require(has(k), "missing setting '" + k + "'");
        try {
            size_t pos;
            long double v = std::stold(kv.at(k), &pos);
            if (pos != kv.at(k).size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("setting '" + k + "' must be a number, got '" + kv.at(k) + "'");
        }
    }
    std::vector<long> longs(const std::string& k) const {
        std::vector<long> out;
        std::stringstream ss(str(k));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
            if (tok.empty()) continue;
            try {
                size_t pos;
                out.push_back(std::stol(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ValidationError("setting '" + k + "' must be a comma separated list of integers");
            }
        }
        return out;
    }
    std::vector<std::string> strings(const std::string& k) const {
        std::vector<std::string> out;
        std::stringstream ss(str(k));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    }

    // explicit values and consulted defaults; the output path does not change the result
    std::map<std::string, std::string> effective() const {
        auto m = defaults;
        for (auto& [k, v] : kv) m[k] = v;
        m.erase("output.path");
        return m;
    }
    std::string canonical() const {
        std::string s;
        for (auto& [k, v] : effective()) s += k + "=" + v + "\n";
        return s;
    }
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

Settings load_config(const std::string& path) {
    Settings s;
    if (path.empty()) return s;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }
    for (auto& [sec, body] : pt) {
        if (body.empty()) {
            s.kv[sec] = body.data();
            continue;
        }
        for (auto& [key, val] : body) s.kv[sec + "." + key] = val.data();
    }
    return s;
}

std::string fmt(long double v) { return detail::fmt(v); }

// ---------- shared builders ----------

TotallyRealField field_from(const Settings& s) {
    long d = s.num("field.d", 1);
    require(d >= 1, "field.d must be a positive squarefree integer (1 for Q)");
    return d == 1 ? make_field(1) : make_field(2, d);
}

FieldElement element_from(const TotallyRealField& F, const Settings& s, const std::string& k) {
    require(s.has(k), "missing setting '" + k + "'");
    return parse_element(F, s.str(k));
}

// m1, m2 from run.m1/run.m2, or p^l/d_gen and 1/d_gen
std::pair<FieldElement, FieldElement> m_pair_from(const TotallyRealField& F, const Settings& s) {
    if (s.has("run.m1") || s.has("run.m2")) return {element_from(F, s, "run.m1"), element_from(F, s, "run.m2")};
    require(s.has("run.p") && s.has("run.l"), "give run.m1/run.m2 or run.p and run.l");
    auto ls = s.longs("run.l");
    require(ls.size() == 1, "run.l must be a single exponent here");
    return default_m_pair(F, parse_element(F, s.str("run.p")), ls[0]);
}

std::vector<long> l_list(const Settings& s) {
    if (s.has("run.l")) return s.longs("run.l");
    long lmax = s.num("run.l_max", 9);
    require(lmax >= 1, "run.l_max must be at least 1");
    std::vector<long> ls;
    for (long l = 1; l <= lmax; l += 2) ls.push_back(l);
    return ls;
}

json element_json(const TotallyRealField& F, const FieldElement& x) {
    json j;
    j["value"] = x.str();
    std::vector<double> emb;
    for (int i = 1; i <= F.r; ++i) emb.push_back(static_cast<double>(embed(F, x, i).mid_ld()));
    j["embeddings"] = emb;
    return j;
}

json complex_json(std::complex<long double> z) { return json{{"re", static_cast<double>(z.real())}, {"im", static_cast<double>(z.imag())}}; }

// ---------- output ----------

struct Output {
    Settings settings;
    std::string command;

    std::string hash() const { return sha256_hex(command + "\n" + settings.canonical()); }

    json meta() const {
        json m;
        m["tool"] = "petersson";
        m["version"] = kVersion;
        m["command"] = command;
        m["config_sha256"] = hash();
        json st = json::object();
        for (auto& [k, v] : settings.effective()) st[k] = v;
        m["settings"] = st;
        return m;
    }

    std::string csv_banner() const { return std::string("# petersson ") + kVersion + " " + command + " config_sha256=" + hash() + "\n"; }

    // structured payload to --out (or stdout); a one line summary to stdout when writing a file
    void emit(const std::string& body, const std::string& summary) const {
        std::string path = settings.str("output.path");
        if (path.empty() || path == "-") {
            std::cout << body;
            if (!body.empty() && body.back() != '\n') std::cout << '\n';
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ValidationError("cannot write output file '" + path + "'");
        f << body;
        if (!body.empty() && body.back() != '\n') f << '\n';
        std::cout << summary << " -> " << path << "\n";
    }

    void emit_json(json payload, const std::string& summary) const {
        json root;
        root["meta"] = meta();
        for (auto& [k, v] : payload.items()) root[k] = v;
        emit(root.dump(2), summary);
    }
};

// ---------- subcommands ----------

void cmd_field_info(const Output& out) {
    auto F = field_from(out.settings);
    json j;
    j["r"] = F.r;
    j["d"] = F.d;
    j["disc"] = F.disc.get_str();
    j["w"] = F.r == 1 ? "none" : (F.half() ? "(1+sqrt(d))/2" : "sqrt(d)");
    if (F.r == 2) {
        j["eps"] = element_json(F, F.eps);
        j["eps_norm"] = F.eps_norm;
        j["eps_plus"] = F.eps_plus().str();
    }
    j["d_gen"] = element_json(F, F.d_gen);
    j["d_gen_totally_positive"] = F.d_gen_totally_positive;
    j["class_number_one"] = verify_class_number_one(F);
    j["narrow_class_number_one"] = is_narrow_class_number_one(F);
    auto U = unit_class_representatives(F);
    std::vector<std::string> u, up;
    for (auto& x : U.U) u.push_back(x.str());
    for (auto& x : U.U_plus) up.push_back(x.str());
    j["unit_classes"] = u;
    j["totally_positive_unit_classes"] = up;
    out.emit_json(j, "field d=" + std::to_string(F.d));
}

void cmd_shortest_vector(const Output& out) {
    auto F = field_from(out.settings);
    auto g = element_from(F, out.settings, "run.level_gen");
    require(!g.is_zero() && g.is_integral(), "level generator must be a nonzero integral element");
    auto I = make_ideal(F, g);
    auto B = box_set(F, I);
    json j;
    j["ideal_generator"] = I.gen.str();
    j["ideal_norm"] = I.norm.get_str();
    j["delta_sq"] = B.delta_sq.get_str();
    j["delta"] = B.delta();
    j["delta_tilde"] = B.delta_tilde();
    j["box_rule"] = "|sigma_j(s)| <= 2 delta~ = delta/sqrt(r)";
    json mins = json::array(), A = json::array();
    for (auto& s : B.minimizers) mins.push_back(element_json(F, s));
    for (auto& s : B.A) A.push_back(element_json(F, s));
    j["minimizers"] = mins;
    j["minimizer_count"] = B.minimizers.size();
    j["A"] = A;
    j["A_size"] = B.A.size();
    j["equal_coordinates_lemma"] = lemma_equal_coordinates_holds(B);
    out.emit_json(j, "|A| = " + std::to_string(B.A.size()));
}

void cmd_kloosterman(const Output& out, bool exact) {
    const auto& s = out.settings;
    auto F = field_from(s);
    FieldElement id = F.one() / F.d_gen;
    FieldElement m1 = s.has("run.m1") ? element_from(F, s, "run.m1") : id;
    FieldElement m2 = s.has("run.m2") ? element_from(F, s, "run.m2") : id;
    FieldElement n = s.has("run.n") ? element_from(F, s, "run.n") : F.one();
    FieldElement c = element_from(F, s, "run.c");
    KloostermanOptions opt;
    opt.workers = static_cast<int>(s.num("run.workers", 1));
    opt.pair_budget = s.num("run.pair_budget", opt.pair_budget);
    auto S = global_kloosterman(F, m1, m2, n, c, opt);
    json j;
    j["m1"] = m1.str();
    j["m2"] = m2.str();
    j["n"] = n.str();
    j["c"] = c.str();
    j["value"] = complex_json(S.approx);
    j["error_bound"] = static_cast<double>(S.err);
    j["cyclotomic_order"] = S.Q;
    j["pair_count"] = S.pair_count();
    if (exact) {
        j["nonzero"] = !S.is_zero();
        j["verdict_method"] = "exact cyclotomic zero test";
    } else {
        bool certain = std::abs(S.approx) > S.err;
        j["nonzero"] = certain ? json(true) : json(nullptr);
        j["verdict_method"] = certain ? "numeric (|S| > error bound)" : "undecided numerically, rerun with --exact-zero-test";
    }
    out.emit_json(j, "S = " + fmt(S.approx.real()) + (S.approx.imag() >= 0 ? "+" : "") + fmt(S.approx.imag()) + "i");
}

void cmd_bessel(const Output& out) {
    const auto& s = out.settings;
    require(s.has("run.order") && s.has("run.x"), "bessel needs --order and --x");
    BesselRequest req{s.num("run.order", 0), s.ld("run.x"),
                      static_cast<long double>(s.real("run.target", 1e-9))};
    auto J = bessel_j(req);
    static const char* names[] = {"exact", "series", "miller", "mpfr"};
    json j;
    j["order"] = req.a;
    j["x"] = static_cast<double>(req.x);
    j["value"] = fmt(J.value());
    j["sign"] = J.sign;
    j["log_abs"] = static_cast<double>(J.log_abs);
    j["rel_err"] = static_cast<double>(J.rel_err);
    j["method"] = names[static_cast<int>(J.method)];
    out.emit_json(j, "J = " + fmt(J.value()));
}

void cmd_bessel_suite(const Output& out) {
    const auto& s = out.settings;
    auto checks = s.strings("run.check");
    if (checks.empty() || (checks.size() == 1 && checks[0] == "all")) checks = {"i", "iii", "iv", "v"};
    auto grid = s.has("run.grid") ? s.longs("run.grid") : default_suite_orders();
    auto rows = bessel_suite(checks, grid, static_cast<int>(s.num("run.workers", 1)));
    std::ostringstream os;
    os << out.csv_banner();
    os << "check,a,points,violations,min_stat,max_stat,pass\n";
    long bad = 0;
    for (auto& r : rows) {
        os << r.check << ',' << r.a << ',' << r.points << ',' << r.violations << ',' << fmt(r.min_stat) << ','
           << fmt(r.max_stat) << ',' << (r.violations == 0 ? "PASS" : "FAIL") << '\n';
        bad += r.violations;
    }
    os << "# constants b=" << fmt(bessel_constants::b) << " c=" << fmt(bessel_constants::c) << " c1=" << fmt(bessel_constants::c1)
       << " c2=" << fmt(bessel_constants::c2) << " C=" << fmt(bessel_constants::C) << '\n';
    out.emit(os.str(), std::to_string(rows.size()) + " rows, " + std::to_string(bad) + " violations");
}

GeometricSideInput geometric_input_from(const Settings& s) {
    auto F = field_from(s);
    auto [m1, m2] = m_pair_from(F, s);
    long level = s.num("run.level", 1);
    require(level >= 1, "run.level must be a positive integer");
    GeometricSideInput in{F, F.element(level), s.has("run.hecke") ? element_from(F, s, "run.hecke") : F.one(), m1, m2, {}};
    if (s.has("run.k")) {
        in.k = s.longs("run.k");
    } else {
        require(s.has("run.p") && s.has("run.l"), "give run.k or run.p and run.l to take k from the schedule");
        auto W = weight_schedule(F, level, parse_element(F, s.str("run.p")), s.longs("run.l"));
        require(W.entries.size() == 1, "run.l must be a single exponent here");
        require(W.entries[0].admissible, "exponent not admissible: " + W.entries[0].gap);
        in.k = W.entries[0].k;
    }
    for (auto& c : s.strings("run.cutoffs")) {
        mpq_class q;
        try {
            q = mpq_class(c);
            q.canonicalize();
        } catch (const std::exception&) {
            throw ValidationError("cutoffs must be rationals like 12 or 25/2");
        }
        in.cutoffs.push_back(q);
    }
    if (!in.cutoffs.empty()) require(static_cast<int>(in.cutoffs.size()) == F.r, "give one cutoff per embedding");
    in.workers = static_cast<int>(s.num("run.workers", 1));
    in.point_budget = s.num("run.point_budget", in.point_budget);
    in.pair_budget = s.num("run.pair_budget", in.pair_budget);
    in.cutoff_target = s.real("run.cutoff_target", in.cutoff_target);
    return in;
}

void cmd_geom_side(const Output& out) {
    auto in = geometric_input_from(out.settings);
    auto rep = geometric_side(in);
    const auto& F = in.F;
    json j;
    j["m1"] = in.m1.str();
    j["m2"] = in.m2.str();
    j["level"] = in.level.str();
    j["k"] = in.k;
    j["t_hat"] = rep.t_hat;
    j["main_term"] = complex_json(rep.main_term);
    j["box_term"] = complex_json(rep.box_term);
    j["box_error"] = static_cast<double>(rep.box_error);
    j["box_points"] = rep.box_points;
    j["tail_truncated"] = complex_json(rep.tail_truncated);
    j["tail_remainder_bound"] = static_cast<double>(rep.tail_remainder_bound);
    j["tail_points"] = rep.tail_points;
    std::vector<std::string> cut;
    for (auto& c : rep.cutoffs) cut.push_back(c.get_str());
    j["cutoffs"] = cut;
    j["total"] = complex_json(rep.total());
    j["scale"] = static_cast<double>(rep.scale);
    j["scaled_box"] = static_cast<double>(rep.scaled_box());
    j["scaled_tail"] = static_cast<double>(rep.scaled_tail());
    j["scaled_remainder"] = static_cast<double>(rep.scaled_remainder());
    json win = json::array();
    for (int i = 0; i < F.r && i < static_cast<int>(rep.window.size()); ++i) {
        auto& w = rep.window[i];
        win.push_back({{"k", w.k},
                       {"arg", static_cast<double>(w.arg)},
                       {"lower", static_cast<double>(w.lower)},
                       {"upper", static_cast<double>(w.upper)},
                       {"inside", w.inside}});
    }
    j["window"] = win;
    j["window_satisfied"] = rep.window_satisfied();
    out.emit_json(j, "total = " + fmt(rep.total().real()));
}

WeightSchedule schedule_from(const Settings& s) {
    auto F = field_from(s);
    require(s.has("run.p"), "missing setting 'run.p'");
    return weight_schedule(F, s.num("run.level", 1), parse_element(F, s.str("run.p")), l_list(s));
}

void cmd_weight_schedule(const Output& out) {
    auto W = schedule_from(out.settings);
    std::ostringstream os;
    os << out.csv_banner() << schedule_csv(W) << "# log_k_over_l_min=" << fmt(W.log_k_over_l) << '\n';
    out.emit(os.str(), std::to_string(W.admissible().size()) + " admissible of " + std::to_string(W.entries.size()));
}

void cmd_decay_sweep(const Output& out) {
    const auto& s = out.settings;
    auto W = schedule_from(s);
    SweepOptions opt;
    opt.workers = static_cast<int>(s.num("run.workers", 1));
    opt.point_budget = s.num("run.point_budget", opt.point_budget);
    opt.cutoff_target = s.real("run.cutoff_target", opt.cutoff_target);
    auto rows = decay_sweep(W, opt);
    std::string format = s.str("output.format", "csv");
    std::string summary = std::to_string(rows.size()) + " rows";
    if (format == "json") {
        json j;
        j["log_k_over_l_min"] = static_cast<double>(W.log_k_over_l);
        j["rows"] = sweep_json(rows);
        out.emit_json(j, summary);
    } else {
        require(format == "csv", "output.format must be csv or json");
        out.emit(out.csv_banner() + sweep_csv(rows, W.F.r), summary);
    }
}

std::vector<std::pair<long, long>> parse_pairs(const std::string& text) {
    std::vector<std::pair<long, long>> out;
    std::regex re(R"(\(\s*(\d+)\s*,\s*(\d+)\s*\))");
    std::string rest = text;
    for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it)
        out.push_back({std::stol((*it)[1]), std::stol((*it)[2])});
    std::string stripped = std::regex_replace(text, re, "");
    stripped.erase(std::remove_if(stripped.begin(), stripped.end(), [](char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); }),
                   stripped.end());
    require(stripped.empty() && !out.empty(), "pairs must look like \"(1,1),(1,2)\"");
    return out;
}

void cmd_oracle(const Output& out) {
    const auto& s = out.settings;
    auto pairs = s.has("run.pairs") ? parse_pairs(s.str("run.pairs")) : default_oracle_pairs();
    auto r = petersson_ratio_test(s.num("run.k", 12), pairs, s.num("run.cutoff", 400), static_cast<int>(s.num("run.workers", 1)));
    json rows = json::array();
    for (auto& row : r.rows)
        rows.push_back({{"m", row.m},
                        {"n", row.n},
                        {"geometric", fmt(row.geometric)},
                        {"error_bound", static_cast<double>(row.error)},
                        {"a_m_a_n", row.tau_product.get_str()},
                        {"C", fmt(row.C)}});
    json j;
    j["k"] = r.k;
    j["rows"] = rows;
    j["reference"] = fmt(r.reference);
    j["spread"] = static_cast<double>(r.spread);
    j["max_relative_error"] = static_cast<double>(r.max_error);
    j["pass"] = r.spread <= 1e-8L;
    out.emit_json(j, "spread = " + fmt(r.spread));
}

DiscreteMeasure read_atoms(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open atoms file '" + path + "'");
    DiscreteMeasure m;
    std::string line;
    long lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        bool header_ok = first;
        first = false;
        std::stringstream ss(line);
        std::string a, b;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        try {
            long double x = std::stold(a);
            long double w = b.empty() ? 1.0L : std::stold(b);
            m.atoms.push_back({x, w});
        } catch (const std::exception&) {
            if (header_ok) continue;
            throw ValidationError("atoms file line " + std::to_string(lineno) + " is not 'x,weight'");
        }
    }
    require(!m.atoms.empty(), "atoms file has no atoms");
    return m;
}

void cmd_discrepancy(const Output& out) {
    const auto& s = out.settings;
    require(s.has("run.atoms"), "discrepancy needs --atoms");
    auto nu = read_atoms(s.str("run.atoms"));
    ReferenceMeasure ref;
    std::string r = s.str("run.ref", "sato-tate");
    if (r == "mu-p") {
        ref.kind = Reference::MuP;
        ref.p = s.real("run.p_ref", 0);
        require(ref.p > 1, "mu-p needs --p greater than 1");
    } else {
        require(r == "sato-tate", "ref must be sato-tate or mu-p");
    }
    bool normalize = s.str("run.normalize", "false") == "true";
    long double D = discrepancy(nu, ref, normalize);
    json j;
    j["atoms"] = nu.atoms.size();
    j["total_mass"] = static_cast<double>(nu.total());
    j["reference"] = r;
    j["normalized"] = normalize;
    j["D"] = fmt(D);
    out.emit_json(j, "D = " + fmt(D));
}

void fail(const char* kind, const std::string& msg) {
    json e;
    e["error"] = {{"kind", kind}, {"message", msg}, {"version", kVersion}};
    std::cerr << e.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Petersson trace formula toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::map<std::string, std::string> flags;  // setting key -> flag value, when given
    std::optional<int> workers_flag;
    bool exact_zero = false, normalize = false;

    app.add_option("--config", config_path, "INI file with [field] [run] [output] sections");
    app.add_option("--workers", workers_flag, "worker threads (overrides PETERSSON_WORKERS and config)");

    // each flag writes one setting key
    std::vector<std::unique_ptr<std::string>> store;
    auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        store.push_back(std::make_unique<std::string>());
        std::string* target = store.back().get();
        sub->add_option_function<std::string>(flag, [&flags, key, target](const std::string& v) { *target = v; flags[key] = v; }, help);
    };
    auto common = [&](CLI::App* sub) {
        bind(sub, "--out", "output.path", "write the structured output here");
        bind(sub, "--format", "output.format", "csv or json");
    };

    auto* fi = app.add_subcommand("field-info", "field data as JSON");
    bind(fi, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    common(fi);

    auto* sv = app.add_subcommand("shortest-vector", "shortest vectors and box set of a principal ideal");
    bind(sv, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    bind(sv, "--level-gen", "run.level_gen", "generator, e.g. \"3+w\"");
    common(sv);

    auto* kl = app.add_subcommand("kloosterman", "Kloosterman sum S(m1,m2;n;c)");
    bind(kl, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    bind(kl, "--c", "run.c", "modulus");
    bind(kl, "--m1", "run.m1", "element of the inverse different (default 1/d_gen)");
    bind(kl, "--m2", "run.m2", "element of the inverse different (default 1/d_gen)");
    bind(kl, "--n", "run.n", "twist (default 1)");
    bind(kl, "--pair-budget", "run.pair_budget", "residue pair budget");
    kl->add_flag("--exact-zero-test", exact_zero, "decide vanishing exactly in Z[zeta]");
    common(kl);

    auto* be = app.add_subcommand("bessel", "J_a(x) with error bound");
    bind(be, "--order", "run.order", "integer order a");
    bind(be, "--x", "run.x", "argument x");
    bind(be, "--target", "run.target", "target relative error");
    common(be);

    auto* bs = app.add_subcommand("bessel-suite", "grid checks of the Bessel bounds");
    bind(bs, "--check", "run.check", "i, iii, iv, v, comma list or all");
    bind(bs, "--grid", "run.grid", "comma separated orders");
    common(bs);

    auto* gs = app.add_subcommand("geom-side", "geometric side report");
    bind(gs, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    bind(gs, "--level", "run.level", "level s~ (positive integer)");
    bind(gs, "--m1", "run.m1", "first index");
    bind(gs, "--m2", "run.m2", "second index");
    bind(gs, "--p", "run.p", "prime element p~ (with --l, builds m1, m2 and k)");
    bind(gs, "--l", "run.l", "odd exponent");
    bind(gs, "--k", "run.k", "comma separated weights");
    bind(gs, "--cutoffs", "run.cutoffs", "comma separated cutoffs (auto when absent)");
    common(gs);

    auto* ws = app.add_subcommand("weight-schedule", "weights placing the Bessel arguments in the window");
    bind(ws, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    bind(ws, "--p", "run.p", "prime element p~");
    bind(ws, "--level", "run.level", "level s~");
    bind(ws, "--l-max", "run.l_max", "odd l from 1 to this");
    bind(ws, "--l", "run.l", "explicit comma separated odd exponents");
    common(ws);

    auto* ds = app.add_subcommand("decay-sweep", "tail and box decay along the schedule");
    bind(ds, "--d", "field.d", "squarefree d > 1, or 1 for Q");
    bind(ds, "--p", "run.p", "prime element p~");
    bind(ds, "--level", "run.level", "level s~");
    bind(ds, "--l-max", "run.l_max", "odd l from 1 to this");
    bind(ds, "--l", "run.l", "explicit comma separated odd exponents");
    bind(ds, "--point-budget", "run.point_budget", "tail point budget per row");
    common(ds);

    auto* orc = app.add_subcommand("oracle", "ratio test against exact cusp form coefficients");
    bind(orc, "--pairs", "run.pairs", "e.g. \"(1,1),(1,2),(2,3)\"");
    bind(orc, "--k", "run.k", "weight 12 (16, 18, 20, 22, 26 optional)");
    bind(orc, "--cutoff", "run.cutoff", "modulus cutoff");
    common(orc);

    auto* dc = app.add_subcommand("discrepancy", "discrepancy against a reference measure");
    bind(dc, "--atoms", "run.atoms", "CSV of x,weight");
    bind(dc, "--ref", "run.ref", "sato-tate or mu-p");
    bind(dc, "--p", "run.p_ref", "p for mu-p");
    dc->add_flag("--normalize", normalize, "scale atoms to total mass 1");
    common(dc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("validation", e.what());
        return 1;
    }

    try {
        Output out;
        out.command = app.get_subcommands().front()->get_name();
        out.settings = load_config(config_path);
        if (const char* env = std::getenv("PETERSSON_WORKERS")) out.settings.kv["run.workers"] = env;
        for (auto& [k, v] : flags) out.settings.kv[k] = v;
        if (workers_flag) out.settings.kv["run.workers"] = std::to_string(*workers_flag);
        if (exact_zero) out.settings.kv["run.exact_zero_test"] = "true";
        if (normalize) out.settings.kv["run.normalize"] = "true";
        long w = out.settings.num("run.workers", 1);
        require(w >= 1 && w <= 1024, "worker count must be in [1, 1024]");

        const std::string& c = out.command;
        if (c == "field-info") cmd_field_info(out);
        else if (c == "shortest-vector") cmd_shortest_vector(out);
        else if (c == "kloosterman") cmd_kloosterman(out, out.settings.str("run.exact_zero_test") == "true");
        else if (c == "bessel") cmd_bessel(out);
        else if (c == "bessel-suite") cmd_bessel_suite(out);
        else if (c == "geom-side") cmd_geom_side(out);
        else if (c == "weight-schedule") cmd_weight_schedule(out);
        else if (c == "decay-sweep") cmd_decay_sweep(out);
        else if (c == "oracle") cmd_oracle(out);
        else if (c == "discrepancy") cmd_discrepancy(out);
    } catch (const ValidationError& e) {
        fail("validation", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        fail("validation", std::string("malformed number: ") + e.what());
        return 1;
    } catch (const std::out_of_range& e) {
        fail("validation", std::string("number out of range: ") + e.what());
        return 1;
    } catch (const UnsupportedError& e) {
        fail("unsupported", e.what());
        return 1;
    } catch (const ResourceError& e) {
        fail("resource", e.what());
        return 2;
    } catch (const std::exception& e) {
        fail("internal", e.what());
        return 3;
    }
    return 0;
}
