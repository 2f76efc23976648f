#include "cdmarl/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cdmarl {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    // shortest representation that round-trips exactly
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& metadata_comment,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::trunc), n_cols_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    out_ << "# " << metadata_comment << "\n";
    for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != n_cols_)
        throw std::invalid_argument("csv row width does not match header");
    for (size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << "\n";
}

std::string metadata_comment(uint64_t config_hash, uint64_t seed, const std::string& extra) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "config_hash=%016llx seed=%llu",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed));
    std::string s = buf;
    if (!extra.empty()) s += " " + extra;
    return s;
}

} // namespace cdmarl
