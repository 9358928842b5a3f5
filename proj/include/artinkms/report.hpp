#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "artinkms/linalg.hpp"

namespace artinkms {

using Json = nlohmann::ordered_json;

/// Doubles rounded to 12 significant digits before serialization, so that
/// identical analyses produce byte-identical reports.
inline double round12(double x) {
    if (!std::isfinite(x)) return x;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline Json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return round12(x);
}

inline Json json_vector(const TraceVec& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v(i)));
    return arr;
}

inline Json json_matrix(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json_number(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string format_csv(double x) {
    if (!std::isfinite(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace artinkms
