#include "redlab/json_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "redlab/errors.hpp"

namespace redlab::json_io {

namespace {

void require_keys(const ordered_json& j, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const char* where) {
    if (!j.is_object()) throw SchemaError(std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!required.count(key) && !optional.count(key))
            throw SchemaError("unknown key \"" + key + "\" in " + where);
    }
    for (const auto& key : required)
        if (!j.contains(key)) throw SchemaError("missing key \"" + key + "\" in " + where);
}

std::vector<double> number_array(const ordered_json& j, const char* where) {
    if (!j.is_array()) throw SchemaError(std::string(where) + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(json_number(v, where));
    return out;
}

std::vector<std::vector<double>> number_matrix(const ordered_json& j, const char* where) {
    if (!j.is_array()) throw SchemaError(std::string(where) + " must be a 2D array");
    std::vector<std::vector<double>> out;
    for (const auto& row : j) out.push_back(number_array(row, where));
    for (const auto& row : out)
        if (row.size() != out.front().size())
            throw SchemaError(std::string(where) + " rows differ in length");
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) throw NonFinite("cannot serialize NaN");
    if (std::isinf(x)) throw NonFinite("cannot serialize Inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void dump_value(const ordered_json& j, std::string& out, int indent) {
    const std::string pad(indent * 2, ' ');
    const std::string pad_in((indent + 1) * 2, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in + ordered_json(key).dump() + ": ";
                dump_value(value, out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool scalars = true;
            for (const auto& v : j)
                if (v.is_structured()) scalars = false;
            out += scalars ? "[" : "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += scalars ? ", " : ",\n";
                first = false;
                if (!scalars) out += pad_in;
                dump_value(v, out, indent + 1);
            }
            out += scalars ? "]" : "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

double json_number(const ordered_json& j, const char* context) {
    if (!j.is_number()) throw SchemaError(std::string(context) + " must be a number");
    return j.get<double>();
}

MeasurementProblem decode_problem(const ordered_json& j) {
    require_keys(j, {"system", "instrument"},
                 {"label", "coupling", "background_level"}, "scenario");
    MeasurementProblem p;
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw SchemaError("label must be a string");
        p.label = j["label"].get<std::string>();
    }

    const auto& sys = j.at("system");
    require_keys(sys, {"phi", "amp_re"}, {"amp_im"}, "system");
    p.system.phi = number_array(sys.at("phi"), "system.phi");
    const auto amp_re = number_array(sys.at("amp_re"), "system.amp_re");
    std::vector<double> amp_im(amp_re.size(), 0.0);
    if (sys.contains("amp_im")) {
        amp_im = number_array(sys.at("amp_im"), "system.amp_im");
        if (amp_im.size() != amp_re.size())
            throw SchemaError("amp_re and amp_im differ in length");
    }
    for (size_t i = 0; i < amp_re.size(); ++i)
        p.system.amplitudes.emplace_back(amp_re[i], amp_im[i]);

    const auto& inst = j.at("instrument");
    require_keys(inst, {"readings"}, {"ground_re", "ground_im"}, "instrument");
    p.instrument.readings = number_array(inst.at("readings"), "instrument.readings");
    if (inst.contains("ground_re")) {
        const auto gre = number_array(inst.at("ground_re"), "instrument.ground_re");
        std::vector<double> gim(gre.size(), 0.0);
        if (inst.contains("ground_im")) {
            gim = number_array(inst.at("ground_im"), "instrument.ground_im");
            if (gim.size() != gre.size())
                throw SchemaError("ground_re and ground_im differ in length");
        }
        for (size_t i = 0; i < gre.size(); ++i)
            p.instrument.ground_weights.emplace_back(gre[i], gim[i]);
    } else if (inst.contains("ground_im")) {
        throw SchemaError("ground_im given without ground_re");
    }

    if (j.contains("coupling")) {
        require_keys(j.at("coupling"), {"blocks"}, {}, "coupling");
        const auto& blocks = j.at("coupling").at("blocks");
        if (!blocks.is_array()) throw SchemaError("coupling.blocks must be an array");
        for (const auto& bj : blocks) {
            require_keys(bj, {"g", "gp", "re"}, {"im"}, "coupling block");
            if (!bj.at("g").is_number_integer() || !bj.at("gp").is_number_integer())
                throw SchemaError("block indices g/gp must be integers");
            const int g = bj.at("g").get<int>();
            const int gp = bj.at("gp").get<int>();
            const auto re = number_matrix(bj.at("re"), "block re");
            std::vector<std::vector<double>> im;
            if (bj.contains("im")) {
                im = number_matrix(bj.at("im"), "block im");
                if (im.size() != re.size() || (re.size() && im[0].size() != re[0].size()))
                    throw SchemaError("block re/im shapes differ");
            }
            const int rows = static_cast<int>(re.size());
            const int cols = rows ? static_cast<int>(re[0].size()) : 0;
            if (rows != cols) throw SchemaError("coupling block must be square");
            Matrix m(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    m(r, c) = Complex(re[r][c], im.empty() ? 0.0 : im[r][c]);
            if (p.coupling.blocks.count({g, gp}))
                throw SchemaError("duplicate coupling block (" + std::to_string(g) + "," +
                                  std::to_string(gp) + ")");
            p.coupling.blocks[{g, gp}] = std::move(m);
        }
    }

    if (j.contains("background_level")) {
        const double bg = json_number(j.at("background_level"), "background_level");
        if (bg != 0.0) {
            const int n_p = static_cast<int>(p.instrument.readings.size());
            auto it = p.coupling.blocks.find({0, 0});
            if (it == p.coupling.blocks.end())
                p.coupling.blocks[{0, 0}] = bg * Matrix::Identity(n_p, n_p);
            else
                it->second += bg * Matrix::Identity(n_p, n_p);
        }
    }
    return validate_problem(p);
}

ordered_json encode_problem(const MeasurementProblem& problem) {
    ordered_json j;
    j["label"] = problem.label;
    ordered_json sys;
    sys["phi"] = problem.system.phi;
    std::vector<double> are, aim;
    for (const auto& a : problem.system.amplitudes) {
        are.push_back(a.real());
        aim.push_back(a.imag());
    }
    sys["amp_re"] = are;
    sys["amp_im"] = aim;
    j["system"] = sys;

    ordered_json inst;
    inst["readings"] = problem.instrument.readings;
    std::vector<double> gre, gim;
    for (const auto& w : problem.instrument.ground_weights) {
        gre.push_back(w.real());
        gim.push_back(w.imag());
    }
    inst["ground_re"] = gre;
    inst["ground_im"] = gim;
    j["instrument"] = inst;

    ordered_json blocks = ordered_json::array();
    for (const auto& [key, m] : problem.coupling.blocks) {
        const auto [g, gp] = key;
        if (g > gp) continue;  // lower triangle is implied by Hermiticity
        if (m.isZero(0.0)) continue;
        ordered_json bj;
        bj["g"] = g;
        bj["gp"] = gp;
        ordered_json re = ordered_json::array(), im = ordered_json::array();
        for (int r = 0; r < m.rows(); ++r) {
            ordered_json rrow = ordered_json::array(), irow = ordered_json::array();
            for (int c = 0; c < m.cols(); ++c) {
                rrow.push_back(m(r, c).real());
                irow.push_back(m(r, c).imag());
            }
            re.push_back(rrow);
            im.push_back(irow);
        }
        bj["re"] = re;
        bj["im"] = im;
        blocks.push_back(bj);
    }
    ordered_json coupling;
    coupling["blocks"] = blocks;
    j["coupling"] = coupling;
    j["background_level"] = 0.0;
    return j;
}

MeasurementProblem read_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario parse failure: ") + e.what());
    }
    return decode_problem(j);
}

void write_problem_file(const MeasurementProblem& problem, const std::string& path) {
    write_file(encode_problem(problem), path);
}

std::string dump(const ordered_json& j) {
    std::string out;
    dump_value(j, out, 0);
    out += "\n";
    return out;
}

void write_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << dump(j);
}

}  // namespace redlab::json_io
