#include "fofr/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

namespace fofr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string_view::npos; start = pos + 1)
        out.push_back(trim(line.substr(start, pos - start)));
    out.push_back(trim(line.substr(start)));
    return out;
}

double parse_number(std::string_view text, std::size_t line_no) {
    double v = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": non-numeric time or value");
    return v;
}

}  // namespace

const ObservationSeries* CurveTable::find(const std::string& subject, const std::string& variable) const {
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (subjects[i] != subject) continue;
        for (std::size_t v = 0; v < variables.size(); ++v)
            if (variables[v] == variable && series[i][v].size() > 0) return &series[i][v];
    }
    return nullptr;
}

CurveTable to_table(const PredictionSet& predictions) {
    CurveTable t;
    t.subjects = predictions.subject_ids;
    t.variables = predictions.channels;
    for (const auto& row : predictions.values) {
        std::vector<ObservationSeries> out;
        for (const auto& curve : row) out.push_back(ObservationSeries{predictions.grid.points, curve});
        t.series.push_back(std::move(out));
    }
    return t;
}

CurveTable response_table(const FunctionalDataset& data) {
    CurveTable t;
    t.subjects = data.subject_ids;
    t.variables = data.response_names;
    t.series = data.responses;
    return t;
}

CurveTable read_curve_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "empty curve file");
    const auto header = trim(line);
    bool with_role;
    if (header == "subject_id,variable_id,time,value")
        with_role = false;
    else if (header == "subject_id,variable_id,role,time,value")
        with_role = true;
    else
        throw Error(ErrorCode::MalformedRow, "unrecognized header '" + std::string(header) + "'");

    CurveTable t;
    std::unordered_map<std::string, std::size_t> subject_at, variable_at;
    std::vector<std::vector<std::map<double, double>>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (f.size() != (with_role ? 5u : 4u))
            throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": wrong field count");
        if (with_role && f[2] != "response") {
            if (f[2] != "covariate")
                throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad role");
            continue;
        }
        const double time = parse_number(f[with_role ? 3 : 2], line_no);
        const double value = parse_number(f[with_role ? 4 : 3], line_no);
        auto [s, new_subject] = subject_at.try_emplace(std::string(f[0]), t.subjects.size());
        if (new_subject) {
            t.subjects.emplace_back(f[0]);
            rows.emplace_back(t.variables.size());
        }
        auto [v, new_variable] = variable_at.try_emplace(std::string(f[1]), t.variables.size());
        if (new_variable) {
            t.variables.emplace_back(f[1]);
            for (auto& r : rows) r.resize(t.variables.size());
        }
        if (!rows[s->second][v->second].emplace(time, value).second)
            throw Error(ErrorCode::DuplicateTimestamp, "line " + std::to_string(line_no) + ": repeated time");
    }
    for (auto& subject_rows : rows) {
        std::vector<ObservationSeries> out;
        for (auto& points : subject_rows) {
            ObservationSeries s{Vector(static_cast<Index>(points.size())), Vector(static_cast<Index>(points.size()))};
            Index j = 0;
            for (const auto& [time, value] : points) {
                s.times[j] = time;
                s.values[j] = value;
                ++j;
            }
            out.push_back(std::move(s));
        }
        t.series.push_back(std::move(out));
    }
    return t;
}

CurveTable load_curve_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_curve_table(in);
}

void write_curve_table(std::ostream& out, const CurveTable& table) {
    out << "subject_id,variable_id,time,value\n";
    for (std::size_t i = 0; i < table.subjects.size(); ++i)
        for (std::size_t v = 0; v < table.variables.size(); ++v) {
            const auto& s = table.series[i][v];
            for (Index j = 0; j < s.size(); ++j)
                out << table.subjects[i] << ',' << table.variables[v] << ',' << format_double(s.times[j]) << ','
                    << format_double(s.values[j]) << '\n';
        }
}

MetricsReport evaluate(const CurveTable& predictions, const CurveTable& truth) {
    MetricsReport report;
    std::unordered_map<std::string, std::size_t> truth_at;
    for (std::size_t i = 0; i < truth.subjects.size(); ++i) truth_at.emplace(truth.subjects[i], i);
    std::vector<std::pair<std::size_t, std::size_t>> aligned;  // (prediction row, truth row)
    for (std::size_t i = 0; i < predictions.subjects.size(); ++i) {
        auto it = truth_at.find(predictions.subjects[i]);
        if (it != truth_at.end()) aligned.emplace_back(i, it->second);
    }
    report.aligned_subjects = aligned.size();
    report.prediction_only_subjects = predictions.subjects.size() - aligned.size();
    report.truth_only_subjects = truth.subjects.size() - aligned.size();
    if (aligned.empty()) throw Error(ErrorCode::NoOverlap, "no subject appears in both predictions and truth");

    for (std::size_t v = 0; v < predictions.variables.size(); ++v) {
        const auto& name = predictions.variables[v];
        std::size_t tv = truth.variables.size();
        for (std::size_t k = 0; k < truth.variables.size(); ++k)
            if (truth.variables[k] == name) tv = k;
        if (tv == truth.variables.size()) continue;

        ChannelMetrics m;
        m.name = name;
        double sse_total = 0.0, ratio_sum = 0.0;
        std::size_t ratio_count = 0;
        for (auto [pi, ti] : aligned) {
            const auto& y = truth.series[ti][tv];
            const auto& pred = predictions.series[pi][v];
            if (y.size() == 0 || pred.size() == 0) continue;
            double sse = 0.0, energy = 0.0;
            for (Index j = 0; j < y.size(); ++j) {
                const double r = y.values[j] - interpolate_linear(pred.times, pred.values, y.times[j]);
                sse += r * r;
                energy += y.values[j] * y.values[j];
            }
            sse_total += sse;
            m.observations += static_cast<std::size_t>(y.size());
            ++m.subjects;
            if (energy > 0.0) {
                ratio_sum += sse / energy;
                ++ratio_count;
            } else {
                ++m.zero_energy_subjects;
            }
        }
        if (m.observations == 0) continue;
        m.rmse = sse_total / static_cast<double>(m.observations);
        m.rmse_sqrt = std::sqrt(m.rmse);
        m.rmspe = ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
        report.channels.push_back(m);
    }
    if (report.channels.empty()) throw Error(ErrorCode::NoOverlap, "no response variable appears in both tables");
    for (const auto& m : report.channels) {
        report.mean_rmse += m.rmse;
        report.mean_rmse_sqrt += m.rmse_sqrt;
        report.mean_rmspe += m.rmspe;
    }
    const double k = static_cast<double>(report.channels.size());
    report.mean_rmse /= k;
    report.mean_rmse_sqrt /= k;
    report.mean_rmspe /= k;
    return report;
}

MetricsReport evaluate(const PredictionSet& predictions, const FunctionalDataset& truth) {
    if (!truth.has_responses()) throw Error(ErrorCode::NoOverlap, "truth dataset carries no responses");
    return evaluate(to_table(predictions), response_table(truth));
}

}  // namespace fofr
