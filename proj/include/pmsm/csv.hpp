#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmsm/sim.hpp"

namespace pmsm {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Trajectory file schema. One header line, then one row per sample; absent
/// quantities are empty fields; 17 significant digits for lossless round-trips.
inline constexpr const char* kTrajectoryCsvHeader =
    "t,i_d,i_q,omega,v_d,v_q,x_c1,x_c2,tau_hat,rm_hat,x2_ref,W,U,Hc,power_residual";

namespace detail {

inline void append_field(std::string& row, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    row += buf;
}

inline void append_field(std::string& row, const std::optional<double>& v) {
    if (v) append_field(row, *v);
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << kTrajectoryCsvHeader << "\n";
    std::string row;
    for (const auto& s : traj.samples) {
        row.clear();
        detail::append_field(row, s.t);
        row += ',';
        detail::append_field(row, s.x.id);
        row += ',';
        detail::append_field(row, s.x.iq);
        row += ',';
        detail::append_field(row, s.x.omega);
        row += ',';
        detail::append_field(row, s.u.vd);
        row += ',';
        detail::append_field(row, s.u.vq);
        row += ',';
        detail::append_field(row, s.xc(0));
        row += ',';
        detail::append_field(row, s.xc(1));
        row += ',';
        detail::append_field(row, s.tauHat);
        row += ',';
        detail::append_field(row, s.rmHat);
        row += ',';
        detail::append_field(row, s.x2Ref);
        row += ',';
        detail::append_field(row, s.W);
        row += ',';
        detail::append_field(row, s.U);
        row += ',';
        detail::append_field(row, s.Hc);
        row += ',';
        detail::append_field(row, s.powerResidual);
        os << row << "\n";
    }
}

inline std::vector<TrajectorySample> read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw CsvError("empty trajectory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryCsvHeader) throw CsvError("unexpected trajectory header: " + line);

    std::vector<TrajectorySample> samples;
    int lineNo = 1;
    while (std::getline(is, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::optional<double>> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell = line.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (cell.empty()) {
                fields.push_back(std::nullopt);
            } else {
                try {
                    std::size_t pos = 0;
                    const double v = std::stod(cell, &pos);
                    if (pos != cell.size()) throw std::invalid_argument("trailing characters");
                    fields.push_back(v);
                } catch (const std::exception&) {
                    throw CsvError("line " + std::to_string(lineNo) + ": bad number '" + cell + "'");
                }
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 15) {
            throw CsvError("line " + std::to_string(lineNo) + ": expected 15 fields, got " +
                           std::to_string(fields.size()));
        }
        auto need = [&](int idx, const char* name) -> double {
            if (!fields[idx]) {
                throw CsvError("line " + std::to_string(lineNo) + ": missing field " +
                               std::string(name));
            }
            return *fields[idx];
        };
        TrajectorySample s;
        s.t = need(0, "t");
        s.x = MotorState{need(1, "i_d"), need(2, "i_q"), need(3, "omega")};
        s.u = InputVoltage{need(4, "v_d"), need(5, "v_q")};
        s.xc = Vec2(need(6, "x_c1"), need(7, "x_c2"));
        s.tauHat = fields[8];
        s.rmHat = fields[9];
        s.x2Ref = need(10, "x2_ref");
        s.W = need(11, "W");
        s.U = need(12, "U");
        s.Hc = need(13, "Hc");
        s.powerResidual = need(14, "power_residual");
        samples.push_back(s);
    }
    return samples;
}

}  // namespace pmsm
