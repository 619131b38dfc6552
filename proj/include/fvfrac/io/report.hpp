#pragma once

#include <sstream>
#include <string>

#include "fvfrac/harness/cases.hpp"
#include "fvfrac/io/text.hpp"

namespace fvfrac {

inline constexpr const char* report_header =
    "case,refinement,face_pairs,seed,h,err_u,err_T,err_T_tip_excluded,newton_iters,wall_ms";

/// Main report: one row per solve, one `avg` row per refinement and one `order` row when
/// at least three refinement levels were averaged.
inline std::string format_report_csv(const ErrorReport& r)
{
    std::ostringstream os;
    os << report_header << '\n';
    for (const auto& row : r.rows)
        os << r.case_id << ',' << row.refinement << ',' << row.face_pairs << ',' << row.seed << ','
           << format_number(row.h) << ',' << format_number(row.err_u) << ',' << format_number(row.err_T) << ','
           << format_number(row.err_T_tip) << ',' << row.newton_iters << ',' << format_number(row.wall_ms) << '\n';
    for (const auto& a : r.averages)
        os << r.case_id << ",avg," << a.face_pairs << ",," << format_number(a.h) << ',' << format_number(a.err_u) << ','
           << format_number(a.err_T) << ',' << format_number(a.err_T_tip) << ',' << format_number(a.newton_iters) << ','
           << format_number(a.wall_ms) << '\n';
    if (r.order_u)
        os << r.case_id << ",order,,,," << format_number(*r.order_u) << ',' << format_number(*r.order_T) << ','
           << format_number(*r.order_T_tip) << ",," << '\n';
    return os.str();
}

/// Companion table with the per-solve diagnostics; reference solves have refinement "ref".
inline std::string format_fracture_csv(const ErrorReport& r)
{
    std::ostringstream os;
    const SolveRecord* first = !r.rows.empty() ? &r.rows.front() : (!r.references.empty() ? &r.references.front() : nullptr);
    os << "case,refinement,face_pairs,seed";
    if (first)
        for (const auto& [k, v] : first->extra) os << ',' << k;
    os << '\n';
    auto emit = [&](const SolveRecord& row, const std::string& level) {
        os << r.case_id << ',' << level << ',' << row.face_pairs << ',' << row.seed;
        for (const auto& [k, v] : row.extra) os << ',' << format_number(v);
        os << '\n';
    };
    for (const auto& row : r.rows) emit(row, std::to_string(row.refinement));
    for (const auto& row : r.references) emit(row, "ref");
    return os.str();
}

/// gnuplot script plotting the seed-averaged errors against h on log axes.
inline std::string format_gnuplot(const ErrorReport& r, const std::string& csv_name)
{
    std::ostringstream os;
    os << "# " << r.case_id << " seed-averaged errors\n"
       << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set xlabel 'h'\n"
       << "set ylabel 'relative error'\n"
       << "set key left top\n"
       << "avg(c) = (strcol(2) eq 'avg') ? column(c) : 1/0\n"
       << "plot '" << csv_name << "' using 5:(avg(6)) with linespoints title 'err_u', \\\n"
       << "     '" << csv_name << "' using 5:(avg(7)) with linespoints title 'err_T', \\\n"
       << "     '" << csv_name << "' using 5:(avg(8)) with linespoints title 'err_T tip excluded'\n";
    return os.str();
}

/// Writes `<stem>.csv`, `<stem>_fracture.csv` and `<stem>.gp`.
inline void write_report(const ErrorReport& r, const std::string& directory, const std::string& stem)
{
    const std::string base = directory.empty() ? stem : directory + "/" + stem;
    write_text_file(base + ".csv", format_report_csv(r));
    write_text_file(base + "_fracture.csv", format_fracture_csv(r));
    write_text_file(base + ".gp", format_gnuplot(r, stem + ".csv"));
}

inline void write_report_csv(const ErrorReport& r, const std::string& path) { write_text_file(path, format_report_csv(r)); }

}  // namespace fvfrac
