#pragma once

#include <fstream>
#include <string>

#include "herrlab/config.hpp"

#include "json.hpp"

namespace herrlab {

constexpr const char* kEngineVersion = "0.1.0";

// Report JSON is canonical: nlohmann objects keep keys sorted, numbers are
// integers only, and emission appends a single trailing newline.  Wall-clock
// timings never enter report files (they go to stderr) so identical configs
// produce byte-identical reports regardless of worker count.

inline nlohmann::json divisors_json(const ZMod& zm, const Divisors& d) {
    nlohmann::json arr = nlohmann::json::array();
    for (int e : d) arr.push_back(zm.ppow[e]);
    return arr;
}

inline const char* ml_kind_name(MLKind k) {
    switch (k) {
        case MLKind::Stabilized: return "stabilized";
        case MLKind::MLZero: return "ml_zero";
        case MLKind::NotStabilized: return "not_stabilized";
    }
    return "?";
}

inline nlohmann::json schedule_json(const std::vector<QuotWindow>& sched) {
    nlohmann::json arr = nlohmann::json::array();
    for (const QuotWindow& w : sched) arr.push_back({w.N, w.n});
    return arr;
}

inline nlohmann::json report_json(const ZMod& zm, const CohomologyReport& rep,
                                  const std::string& cfg_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = cfg_hash;
    j["variant"] = rep.variant;
    j["module"] = rep.module_tag;
    j["gamma_rank"] = rep.rank_gamma;
    j["outcome"] = rep.stabilized ? "stabilized" : "not_stabilized";
    j["window"] = rep.window;
    j["schedule"] = schedule_json(rep.schedule_echo);
    j["degrees"] = nlohmann::json::array();
    for (size_t d = 0; d < rep.degrees.size(); ++d) {
        const DegreeOutcome& o = rep.degrees[d];
        nlohmann::json jo;
        jo["degree"] = int(d);
        jo["kind"] = ml_kind_name(o.kind);
        jo["divisors"] = divisors_json(zm, o.value);
        jo["level"] = o.level;
        jo["tail_direction_ok"] = o.tail_direction_ok;
        j["degrees"].push_back(jo);
    }
    j["level_traces"] = nlohmann::json::array();
    for (const auto& level : rep.level_traces) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& d : level) row.push_back(divisors_json(zm, d));
        j["level_traces"].push_back(row);
    }
    if (!rep.hk_traces.empty()) {
        j["hk_diagnostic"] = nlohmann::json::array();
        for (const auto& level : rep.hk_traces) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& d : level) row.push_back(divisors_json(zm, d));
            j["hk_diagnostic"].push_back(row);
        }
    }
    if (!rep.diagnostics.empty()) j["diagnostics"] = rep.diagnostics;
    return j;
}

inline nlohmann::json iwasawa_json(const ZMod& zm, const IwasawaReport& rep,
                                   const std::string& cfg_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = cfg_hash;
    j["variant"] = "iwasawa";
    j["schedule"] = schedule_json(rep.schedule_echo);
    j["h1_iw"] = {{"kind", ml_kind_name(rep.ker_kind)}, {"divisors", divisors_json(zm, rep.ker_value)}};
    j["h2_iw"] = {{"kind", ml_kind_name(rep.coker_kind)},
                  {"divisors", divisors_json(zm, rep.coker_value)}};
    j["kernel_trace"] = nlohmann::json::array();
    for (const auto& d : rep.ker_trace) j["kernel_trace"].push_back(divisors_json(zm, d));
    j["cokernel_trace"] = nlohmann::json::array();
    for (const auto& d : rep.coker_trace) j["cokernel_trace"].push_back(divisors_json(zm, d));
    j["consistency"] = rep.consistency;
    j["outcome"] = (rep.ker_kind != MLKind::NotStabilized &&
                    rep.coker_kind != MLKind::NotStabilized)
                       ? "stabilized"
                       : "not_stabilized";
    if (!rep.diagnostics.empty()) j["diagnostics"] = rep.diagnostics;
    return j;
}

inline nlohmann::json lemma_json(const ZMod& zm, const LemmaReport& rep,
                                 const std::string& cfg_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = cfg_hash;
    j["variant"] = "verify-lemmas";
    j["frobenius_bijective_on_tails"] = rep.frobenius_bijective_on_tails;
    j["neumann_residual_zero"] = rep.neumann_residual_zero;
    j["kernel_is_constants"] = rep.kernel_is_constants;
    j["surjective_on_tail_windows"] = rep.surjective_on_tail_windows;
    j["kernel_divisors"] = nlohmann::json::array();
    for (const auto& d : rep.kernel_divisors) j["kernel_divisors"].push_back(divisors_json(zm, d));
    j["outcome"] = "pass";
    return j;
}

inline nlohmann::json duality_json(const ZMod& zm, const DualityReport& rep,
                                   const std::string& cfg_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = cfg_hash;
    j["variant"] = "duality";
    j["orders_match"] = rep.orders_match;
    j["divisors_match"] = rep.divisors_match;
    j["side_a"] = report_json(zm, rep.a, cfg_hash);
    j["side_b"] = report_json(zm, rep.b, cfg_hash);
    j["outcome"] = rep.orders_match ? "pass" : "fail";
    return j;
}

inline void emit_report(const nlohmann::json& j, const std::string& path) {
    if (path.empty()) throw IOError("empty report path");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot open report path: " + path);
    out << j.dump(1, ' ') << '\n';
    if (!out) throw IOError("failed writing report: " + path);
}

}  // namespace herrlab
