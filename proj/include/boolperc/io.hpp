#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "boolperc/connectivity.hpp"
#include "boolperc/estimate.hpp"
#include "boolperc/estimators.hpp"
#include "boolperc/sampler.hpp"

namespace boolperc {

using json = nlohmann::json;

// Shortest round-trip decimal rendering; keeps CSV output byte-stable.
inline std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string shortest(uint64_t v) { return std::to_string(v); }

// FNV-1a over the canonical (sorted-key, compact) JSON dump.
inline uint64_t config_hash(const json& j) {
    const std::string dump = j.dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// --------------------------------------------------------------------------
// Radius law and model (de)serialization. The law's "kind" selects the
// family; power_law_c1 inherits the model dimension unless given its own.

inline json law_to_json(const RadiusLaw& law) {
    json j;
    std::visit(
        [&j](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RadiusLaw::Dirac>) {
                j = {{"kind", "dirac"}, {"r0", v.r0}};
            } else if constexpr (std::is_same_v<T, RadiusLaw::ExpTail>) {
                j = {{"kind", "exp_tail"}, {"c", v.c}};
            } else if constexpr (std::is_same_v<T, RadiusLaw::PowerLawC1>) {
                j = {{"kind", "power_law_c1"}, {"c", v.c}, {"d", v.d}};
            } else if constexpr (std::is_same_v<T, RadiusLaw::StretchedExpC2>) {
                j = {{"kind", "stretched_exp_c2"}, {"c", v.c}, {"a", v.a}};
            } else {
                j = {{"kind", "truncated_at"},
                     {"inner", law_to_json(*v.inner)},
                     {"rmax", v.rmax}};
            }
        },
        law.variant());
    return j;
}

inline RadiusLaw law_from_json(const json& j, int model_d) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error("model.law: expected an object with a \"kind\" field");
    const std::string kind = j.at("kind").get<std::string>();
    const auto need = [&](const char* field) -> double {
        if (!j.contains(field))
            throw config_error(std::string("model.law: missing field \"") + field +
                               "\" for kind " + kind);
        return j.at(field).get<double>();
    };
    if (kind == "dirac") return RadiusLaw::dirac(need("r0"));
    if (kind == "exp_tail") return RadiusLaw::exp_tail(need("c"));
    if (kind == "power_law_c1")
        return RadiusLaw::power_law_c1(need("c"),
                                       j.contains("d") ? j.at("d").get<int>() : model_d);
    if (kind == "stretched_exp_c2") return RadiusLaw::stretched_exp_c2(need("c"), need("a"));
    if (kind == "truncated_at") {
        if (!j.contains("inner")) throw config_error("model.law: truncated_at needs inner");
        return RadiusLaw::truncated_at(law_from_json(j.at("inner"), model_d), need("rmax"));
    }
    throw config_error("model.law: unknown kind \"" + kind + "\"");
}

inline json model_to_json(const ModelSpec& m) {
    return {{"d", m.d},
            {"lambda", m.lambda},
            {"law", law_to_json(m.law)},
            {"eps_trunc", m.eps_trunc}};
}

inline ModelSpec model_from_json(const json& j) {
    if (!j.is_object()) throw config_error("model: expected an object");
    if (!j.contains("d")) throw config_error("model.d: missing");
    if (!j.contains("lambda")) throw config_error("model.lambda: missing");
    if (!j.contains("law")) throw config_error("model.law: missing");
    const int d = j.at("d").get<int>();
    const double lambda = j.at("lambda").get<double>();
    const double eps = j.contains("eps_trunc") ? j.at("eps_trunc").get<double>() : 1e-6;
    try {
        return ModelSpec(d, lambda, law_from_json(j.at("law"), d), eps);
    } catch (const infeasible_error& e) {
        throw config_error(std::string("model: ") + e.what());
    }
}

inline json estimate_to_json(const Estimate& e) {
    return {{"mean", e.mean},
            {"stderr", e.stderr_},
            {"n", e.n},
            {"seed", e.seed},
            {"meta", e.meta}};
}

// One ball per JSON line: center coordinates, radius, coordinate tag.
inline std::string ball_config_to_jsonl(const BallConfig& cfg) {
    std::ostringstream os;
    for (const Ball& b : cfg.balls) {
        json rec;
        std::vector<double> center(b.center.c.begin(),
                                   b.center.c.begin() + cfg.model.d);
        rec["center"] = center;
        rec["radius"] = b.radius;
        if (b.coord == kCoordGhost) {
            rec["coord"] = "g";
        } else if (b.coord != kCoordNone) {
            const CoordSet coords(cfg.model.d, cfg.cells_L);
            const LatticePoint x = coords.site_of(b.coord);
            std::vector<int> xs(x.c.begin(), x.c.begin() + cfg.model.d);
            rec["coord"] = {{"x", xs}, {"n", coords.band_of(b.coord)}};
        }
        os << rec.dump() << "\n";
    }
    return os.str();
}

// Debug dump of the component partition, for failing property tests.
inline json components_debug_json(const ClusterIndex& index, const BallConfig& cfg) {
    json comps = json::object();
    for (size_t i = 0; i < cfg.balls.size(); ++i) {
        const std::string key = std::to_string(index.component_of(i));
        if (!comps.contains(key)) {
            comps[key] = {{"reach", index.component_reach(i)},
                          {"min_origin", index.component_min_origin(i)},
                          {"balls", json::array()}};
        }
        std::vector<double> center(cfg.balls[i].center.c.begin(),
                                   cfg.balls[i].center.c.begin() + cfg.model.d);
        comps[key]["balls"].push_back(
            {{"i", i}, {"center", center}, {"radius", cfg.balls[i].radius}});
    }
    return comps;
}

// --------------------------------------------------------------------------
// Minimal self-contained SVG line plots.

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

inline std::string render_svg_plot(const std::string& title,
                                   const std::vector<PlotSeries>& series) {
    const int W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const auto X = [&](double v) {
        return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr);
    };
    const auto Y = [&](double v) {
        return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
       << H - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        os << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 16
           << "\" text-anchor=\"middle\" font-size=\"11\">" << shortest(xv) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << shortest(yv) << "</text>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        const char* color = colors[ci % 5];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i)
            os << X(s.x[i]) << "," << Y(s.y[i]) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 * ci + 12
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.label
           << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw infeasible_error("cannot write " + path);
    out << content;
}

}  // namespace boolperc
