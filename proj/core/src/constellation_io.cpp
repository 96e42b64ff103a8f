#include "hmdesign/constellation_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hmdesign/errors.hpp"

namespace hmdesign {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

std::string constellation_to_json(const Constellation& c) {
    std::ostringstream out;
    out << "{\n  \"m_h\": " << c.m_h() << ",\n  \"m_l\": " << c.m_l() << ",\n  \"points\": [";
    for (int k = 0; k < c.size(); ++k) {
        out << (k == 0 ? "\n" : ",\n");
        out << "    [" << fmt17(c[k].real()) << ", " << fmt17(c[k].imag()) << "]";
    }
    out << "\n  ]\n}\n";
    return out.str();
}

Constellation constellation_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("constellation JSON parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("m_h") || !doc.contains("m_l") ||
        !doc.contains("points")) {
        throw IoError("constellation JSON must contain m_h, m_l and points");
    }
    if (!doc["m_h"].is_number_integer() || !doc["m_l"].is_number_integer() ||
        !doc["points"].is_array()) {
        throw IoError("constellation JSON has wrong field types");
    }
    const int m_h = doc["m_h"].get<int>();
    const int m_l = doc["m_l"].get<int>();
    std::vector<cdouble> pts;
    pts.reserve(doc["points"].size());
    for (const auto& entry : doc["points"]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number()) {
            throw IoError("each point must be a [re, im] pair");
        }
        pts.emplace_back(entry[0].get<double>(), entry[1].get<double>());
    }
    return Constellation(m_h, m_l, std::move(pts));  // rejects size mismatch / non-finite
}

Constellation load_constellation(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return constellation_from_json(buf.str());
}

void save_constellation(const Constellation& c, const std::string& path) {
    namespace fs = std::filesystem;
    const std::string text = constellation_to_json(c);
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

}  // namespace hmdesign
