#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "herrlab/builtins.hpp"

namespace herrlab {

// Line-oriented key-value configuration with [sections].  Unknown keys are
// rejected; series literals are lists of exponent:coords terms, e.g.
//   phi_factor = 0:1 1:2,0
// means 1 + (2 + 0*t) X.

struct ConfigEntry {
    std::string value;
    int line = 0;
};

struct RawConfig {
    // section -> key -> entry, plus canonical ordering for hashing
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;

    std::optional<std::string> get(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second.value;
    }
    int line_of(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return 0;
        auto k = s->second.find(key);
        return k == s->second.end() ? 0 : k->second.line;
    }
};

namespace detail {
inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}
inline ParseError parse_error(int line, int col, const std::string& what) {
    std::ostringstream os;
    os << "parse error at line " << line << ", column " << col << ": " << what;
    return ParseError(os.str());
}
}  // namespace detail

inline RawConfig parse_raw_config(std::istream& in) {
    RawConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw detail::parse_error(lineno, int(t.size()), "expected ']'");
            section = detail::trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw detail::parse_error(lineno, 2, "empty section name");
            cfg.sections[section];
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw detail::parse_error(lineno, 1, "expected 'key = value'");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw detail::parse_error(lineno, 1, "empty key");
        if (section.empty()) throw detail::parse_error(lineno, 1, "key outside any section");
        if (cfg.sections[section].count(key))
            throw detail::parse_error(lineno, 1, "duplicate key '" + key + "'");
        cfg.sections[section][key] = ConfigEntry{value, lineno};
    }
    return cfg;
}

inline RawConfig parse_raw_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open config file: " + path);
    return parse_raw_config(in);
}

// Canonical reserialization (sorted sections and keys) and its hash.
inline std::string canonical_config_text(const RawConfig& cfg) {
    std::ostringstream os;
    for (const auto& [sec, kv] : cfg.sections) {
        os << '[' << sec << "]\n";
        for (const auto& [k, e] : kv) os << k << " = " << e.value << '\n';
    }
    return os.str();
}

inline std::string config_hash(const RawConfig& cfg) {
    std::uint64_t h = fnv1a64(canonical_config_text(cfg));
    std::ostringstream os;
    os << std::hex;
    for (int i = 15; i >= 0; --i) os << "0123456789abcdef"[(h >> (4 * i)) & 0xf];
    return os.str();
}

// ------------------------------------------------------------------
// Typed pipeline specification
// ------------------------------------------------------------------

enum class RunVariant { HerrPhi, HerrPsi, Iwasawa, VerifyLemmas, Duality, Selftest };

struct PipelineSpec {
    std::string builtin;  // empty for custom module
    int m = 1;
    FieldParams field = qp_field(3);
    FrobKind frob_kind = FrobKind::cyclotomic;
    int frob_degree = 16;
    std::string custom_series;  // custom Frobenius literal
    // custom rank-one module
    bool custom_module = false;
    std::string phi_factor;
    std::vector<std::string> gamma_factors;
    std::vector<i64> gamma_units;
    std::string twist_tag;
    bool apply_chi_lt_twist = false;

    Schedule schedule = default_schedule_q3();
    int window = 3;
    int workers = 1;
    long long max_cells = 200000;
    bool hk_diagnostic = false;
    int lemma_n_max = 8;
    int lemma_N_max = 60;

    std::string hash;  // canonical config hash
};

namespace detail {

inline i64 to_int(const std::string& s, int line, const char* what) {
    try {
        size_t pos = 0;
        i64 v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw parse_error(line, 1, std::string("expected integer for ") + what);
    }
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace detail

// Series literal: whitespace-separated terms `exp:c0,c1,...`.
inline LaurentTrunc parse_series_literal(const RingCtx& ctx, const std::string& text, int line) {
    LaurentTrunc f = s_zero(ctx);
    for (const std::string& term : detail::split_ws(text)) {
        size_t colon = term.find(':');
        if (colon == std::string::npos)
            throw detail::parse_error(line, 1, "series term needs exp:coords, got '" + term + "'");
        i64 e = detail::to_int(term.substr(0, colon), line, "series exponent");
        std::vector<i64> coords;
        std::string rest = term.substr(colon + 1);
        size_t pos = 0;
        while (pos <= rest.size()) {
            size_t comma = rest.find(',', pos);
            std::string piece = comma == std::string::npos ? rest.substr(pos)
                                                           : rest.substr(pos, comma - pos);
            if (piece.empty())
                throw detail::parse_error(line, int(colon + 2 + pos), "empty coordinate");
            coords.push_back(detail::to_int(piece, line, "series coefficient"));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        coords.resize(size_t(ctx.n()), 0);
        f = s_add(f, s_monomial(ctx, int(e), ring_from_coords(ctx, coords)));
    }
    return f;
}

inline Schedule parse_schedule(const std::string& text, int line) {
    Schedule s;
    for (const std::string& tok : detail::split_ws(text)) {
        size_t colon = tok.find(':');
        if (colon == std::string::npos)
            throw detail::parse_error(line, 1, "schedule entries are N:n pairs");
        int N = int(detail::to_int(tok.substr(0, colon), line, "schedule N"));
        int n = int(detail::to_int(tok.substr(colon + 1), line, "schedule n"));
        s.levels.push_back(QuotWindow{N, n});
    }
    if (s.levels.size() < 2) throw ValidationError("schedule needs at least two levels");
    validate_schedule(s);
    return s;
}

inline const std::map<std::string, std::vector<std::string>>& known_config_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"builtin", {"name", "m"}},
        {"field", {"p", "f", "e", "defining_poly", "pi_coords"}},
        {"ring", {"m", "guard"}},
        {"frobenius", {"kind", "degree", "series"}},
        {"module",
         {"kind", "phi_factor", "gamma_factors", "gamma_units", "twist_tag", "chi_lt_twist"}},
        {"pipeline", {"schedule", "window", "workers", "max_cells", "hk_diagnostic"}},
        {"lemmas", {"n_max", "N_max"}},
    };
    return keys;
}

inline PipelineSpec interpret_config(const RawConfig& cfg) {
    // reject unknown sections/keys
    for (const auto& [sec, kv] : cfg.sections) {
        auto it = known_config_keys().find(sec);
        if (it == known_config_keys().end())
            throw ValidationError("unknown config section [" + sec + "]");
        for (const auto& [k, e] : kv) {
            bool ok = false;
            for (const auto& known : it->second)
                if (known == k) ok = true;
            if (!ok)
                throw ValidationError("unknown key '" + k + "' in section [" + sec + "]");
        }
    }
    PipelineSpec spec;
    spec.hash = config_hash(cfg);
    if (auto b = cfg.get("builtin", "name")) {
        spec.builtin = *b;
        bool known = false;
        for (const auto& n : builtin_names())
            if (n == spec.builtin) known = true;
        if (!known) throw ValidationError("unknown builtin '" + spec.builtin + "'");
        if (auto m = cfg.get("builtin", "m"))
            spec.m = int(detail::to_int(*m, cfg.line_of("builtin", "m"), "m"));
    } else {
        if (auto p = cfg.get("field", "p")) {
            spec.field.p = detail::to_int(*p, cfg.line_of("field", "p"), "p");
        }
        if (auto f = cfg.get("field", "f"))
            spec.field.f = int(detail::to_int(*f, cfg.line_of("field", "f"), "f"));
        if (auto e = cfg.get("field", "e"))
            spec.field.e = int(detail::to_int(*e, cfg.line_of("field", "e"), "e"));
        if (spec.field.p == 2) throw ValidationError("p = 2 is not supported (p must be odd)");
        if (auto poly = cfg.get("field", "defining_poly")) {
            spec.field.defining_poly.clear();
            int line = cfg.line_of("field", "defining_poly");
            for (const auto& tok : detail::split_ws(*poly))
                spec.field.defining_poly.push_back(detail::to_int(tok, line, "defining_poly"));
        } else if (spec.field.e == 1 && spec.field.f == 1) {
            spec.field = qp_field(spec.field.p);
        }
        if (auto pc = cfg.get("field", "pi_coords")) {
            spec.field.pi_coords.clear();
            int line = cfg.line_of("field", "pi_coords");
            for (const auto& tok : detail::split_ws(*pc))
                spec.field.pi_coords.push_back(detail::to_int(tok, line, "pi_coords"));
        }
        if (auto m = cfg.get("ring", "m"))
            spec.m = int(detail::to_int(*m, cfg.line_of("ring", "m"), "m"));
        if (auto kind = cfg.get("frobenius", "kind")) {
            if (*kind == "standard")
                spec.frob_kind = FrobKind::standard;
            else if (*kind == "cyclotomic")
                spec.frob_kind = FrobKind::cyclotomic;
            else if (*kind == "custom")
                spec.frob_kind = FrobKind::custom;
            else
                throw ValidationError("frobenius kind must be standard|cyclotomic|custom");
        }
        if (auto d = cfg.get("frobenius", "degree"))
            spec.frob_degree = int(detail::to_int(*d, cfg.line_of("frobenius", "degree"), "degree"));
        if (auto s = cfg.get("frobenius", "series")) spec.custom_series = *s;
        if (auto mk = cfg.get("module", "kind")) {
            if (*mk == "trivial") {
                spec.custom_module = false;
            } else if (*mk == "rank_one") {
                spec.custom_module = true;
            } else {
                throw ValidationError("module kind must be trivial|rank_one");
            }
        }
        if (auto pf = cfg.get("module", "phi_factor")) spec.phi_factor = *pf;
        if (auto gf = cfg.get("module", "gamma_factors")) {
            for (const auto& piece : detail::split_ws(*gf)) spec.gamma_factors.push_back(piece);
        }
        if (auto gu = cfg.get("module", "gamma_units")) {
            int line = cfg.line_of("module", "gamma_units");
            for (const auto& tok : detail::split_ws(*gu))
                spec.gamma_units.push_back(detail::to_int(tok, line, "gamma_units"));
        }
        if (auto tw = cfg.get("module", "chi_lt_twist"))
            spec.apply_chi_lt_twist = (*tw == "true" || *tw == "1");
        if (auto tt = cfg.get("module", "twist_tag")) spec.twist_tag = *tt;
    }
    if (auto s = cfg.get("pipeline", "schedule"))
        spec.schedule = parse_schedule(*s, cfg.line_of("pipeline", "schedule"));
    else if (spec.builtin == "ramified-Q3sqrt3-trivial")
        spec.schedule = stretch_schedule_ramified();
    if (auto w = cfg.get("pipeline", "window"))
        spec.window = int(detail::to_int(*w, cfg.line_of("pipeline", "window"), "window"));
    if (auto w = cfg.get("pipeline", "workers"))
        spec.workers = int(detail::to_int(*w, cfg.line_of("pipeline", "workers"), "workers"));
    if (auto c = cfg.get("pipeline", "max_cells"))
        spec.max_cells = detail::to_int(*c, cfg.line_of("pipeline", "max_cells"), "max_cells");
    if (auto h = cfg.get("pipeline", "hk_diagnostic"))
        spec.hk_diagnostic = (*h == "true" || *h == "1");
    if (auto n = cfg.get("lemmas", "n_max"))
        spec.lemma_n_max = int(detail::to_int(*n, cfg.line_of("lemmas", "n_max"), "n_max"));
    if (auto N = cfg.get("lemmas", "N_max"))
        spec.lemma_N_max = int(detail::to_int(*N, cfg.line_of("lemmas", "N_max"), "N_max"));
    if (spec.m < 1) throw ValidationError("m must be >= 1");
    if (spec.window < 1) throw ValidationError("window must be >= 1");
    return spec;
}

// Materialize the module described by a spec (builtin or custom rank one).
inline AssembledModule assemble_spec(const PipelineSpec& spec) {
    if (!spec.builtin.empty()) {
        AssembledModule out = assemble_builtin(spec.builtin, spec.m, &spec.schedule);
        return out;
    }
    AssembledModule out;
    out.name = "custom";
    out.schedule = spec.schedule;
    int budget = schedule_degree_budget(spec.field, out.schedule, spec.m);
    out.ctx = make_ring(spec.field, spec.m, guard_for(spec.field, budget, 2));
    if (spec.frob_kind == FrobKind::custom) {
        LaurentTrunc s = parse_series_literal(out.ctx, spec.custom_series, 0);
        s.hi = std::min(s.hi, spec.frob_degree + 1);
        out.phi = default_frobenius(out.ctx, FrobKind::custom, spec.frob_degree, &s);
    } else {
        out.phi = default_frobenius(out.ctx, spec.frob_kind, spec.frob_degree);
    }
    std::vector<RingElem> gunits;
    for (i64 u : spec.gamma_units) gunits.push_back(ring_int(out.ctx, u));
    if (spec.custom_module) {
        LaurentTrunc cphi = parse_series_literal(out.ctx, spec.phi_factor, 0);
        std::vector<LaurentTrunc> cgam;
        for (const auto& g : spec.gamma_factors)
            cgam.push_back(parse_series_literal(out.ctx, g, 0));
        out.mod = rank_one_module(out.ctx, out.phi, cphi, cgam, gunits);
    } else {
        out.mod = trivial_module(out.ctx, out.phi, gunits);
    }
    if (spec.apply_chi_lt_twist) out.mod = chi_lt_twist(out.mod, budget);
    if (!spec.twist_tag.empty()) out.mod.twist_tag = spec.twist_tag;
    return out;
}

}  // namespace herrlab
