#include "fofr/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace fofr {

namespace {

constexpr std::string_view kHeader = "subject_id,variable_id,role,time,value";

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_real(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

Interval parse_interval(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2)
        throw Error(ErrorCode::BadConfig, std::string("schema field '") + key + "' must be [lo, hi]");
    return make_interval(j.at(key)[0].get<double>(), j.at(key)[1].get<double>());
}

void check_coverage(const std::vector<ObservationSeries>& series, const Interval& domain, const std::string& name) {
    std::vector<double> pooled;
    for (const auto& s : series) pooled.insert(pooled.end(), s.times.data(), s.times.data() + s.times.size());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    if (pooled.size() < kMinPooledTimes) {
        throw Error(ErrorCode::InsufficientCoverage,
                    "channel '" + name + "' has " + std::to_string(pooled.size()) + " distinct pooled times, need " +
                        std::to_string(kMinPooledTimes));
    }
    const double span = pooled.back() - pooled.front();
    if (span < kMinCoverageFraction * domain.length()) {
        throw Error(ErrorCode::InsufficientCoverage,
                    "channel '" + name + "' pooled times span " + format_double(span) + " of interval length " +
                        format_double(domain.length()));
    }
}

}  // namespace

Interval make_interval(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw Error(ErrorCode::BadConfig, "interval requires lo < hi, got [" + format_double(lo) + ", " + format_double(hi) + "]");
    return Interval{lo, hi};
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void validate_series(const ObservationSeries& series, const Interval& domain, const std::string& label) {
    if (series.times.size() != series.values.size())
        throw Error(ErrorCode::MalformedRow, label + ": times and values differ in length");
    if (series.times.size() < 1) throw Error(ErrorCode::MissingChannel, label + ": no observations");
    for (Index j = 0; j < series.size(); ++j) {
        const double t = series.times[j];
        if (!std::isfinite(t) || !std::isfinite(series.values[j]))
            throw Error(ErrorCode::MalformedRow, label + ": non-finite observation");
        if (!domain.contains(t))
            throw Error(ErrorCode::DomainViolation, label + ": time " + format_double(t) + " outside [" +
                                                        format_double(domain.lo) + ", " + format_double(domain.hi) + "]");
        if (j > 0 && !(t > series.times[j - 1])) {
            if (t == series.times[j - 1])
                throw Error(ErrorCode::DuplicateTimestamp, label + ": repeated time " + format_double(t));
            throw Error(ErrorCode::MalformedRow, label + ": times not increasing");
        }
    }
}

std::vector<ObservationSeries> FunctionalDataset::channel(Role role, std::size_t index) const {
    const auto& table = role == Role::Covariate ? covariates : responses;
    std::vector<ObservationSeries> out;
    out.reserve(table.size());
    for (const auto& row : table) out.push_back(row.at(index));
    return out;
}

FunctionalDataset FunctionalDataset::subset(const std::vector<std::size_t>& rows) const {
    FunctionalDataset out;
    out.covariate_domain = covariate_domain;
    out.response_domain = response_domain;
    out.covariate_names = covariate_names;
    out.response_names = response_names;
    for (auto i : rows) {
        out.subject_ids.push_back(subject_ids.at(i));
        out.covariates.push_back(covariates.at(i));
        if (has_responses()) out.responses.push_back(responses.at(i));
    }
    return out;
}

void validate_dataset(const FunctionalDataset& data, LoadOptions options) {
    if (data.covariate_names.empty()) throw Error(ErrorCode::BadConfig, "dataset declares no covariates");
    if (data.response_names.empty()) throw Error(ErrorCode::BadConfig, "dataset declares no responses");
    if (data.covariates.size() != data.n_subjects())
        throw Error(ErrorCode::MissingChannel, "covariate table does not match subject count");
    if (options.training) {
        if (data.n_subjects() < 2)
            throw Error(ErrorCode::InsufficientCoverage, "training data needs at least 2 subjects");
        if (!data.has_responses()) throw Error(ErrorCode::MissingChannel, "training data has no response rows");
    }
    if (data.has_responses() && data.responses.size() != data.n_subjects())
        throw Error(ErrorCode::MissingChannel, "response table does not match subject count");

    for (std::size_t i = 0; i < data.n_subjects(); ++i) {
        if (data.covariates[i].size() != data.n_covariates())
            throw Error(ErrorCode::MissingChannel, "subject '" + data.subject_ids[i] + "' covariate count mismatch");
        for (std::size_t r = 0; r < data.n_covariates(); ++r)
            validate_series(data.covariates[i][r], data.covariate_domain,
                            "subject '" + data.subject_ids[i] + "' variable '" + data.covariate_names[r] + "'");
        if (!data.has_responses()) continue;
        if (data.responses[i].size() != data.n_responses())
            throw Error(ErrorCode::MissingChannel, "subject '" + data.subject_ids[i] + "' response count mismatch");
        for (std::size_t d = 0; d < data.n_responses(); ++d)
            validate_series(data.responses[i][d], data.response_domain,
                            "subject '" + data.subject_ids[i] + "' variable '" + data.response_names[d] + "'");
    }

    if (options.training) {
        for (std::size_t r = 0; r < data.n_covariates(); ++r)
            check_coverage(data.channel(Role::Covariate, r), data.covariate_domain, data.covariate_names[r]);
        for (std::size_t d = 0; d < data.n_responses(); ++d)
            check_coverage(data.channel(Role::Response, d), data.response_domain, data.response_names[d]);
    }
}

FunctionalDataset read_dataset(std::istream& in, const Schema& schema, LoadOptions options) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kHeader)
        throw Error(ErrorCode::MalformedRow, "header must be exactly '" + std::string(kHeader) + "'");

    std::unordered_map<std::string, std::pair<Role, std::size_t>> variables;
    for (std::size_t r = 0; r < schema.covariates.size(); ++r) variables[schema.covariates[r]] = {Role::Covariate, r};
    for (std::size_t d = 0; d < schema.responses.size(); ++d) {
        if (variables.count(schema.responses[d]))
            throw Error(ErrorCode::BadConfig, "variable '" + schema.responses[d] + "' declared twice");
        variables[schema.responses[d]] = {Role::Response, d};
    }

    // subject -> channel slot -> (time, value) rows
    std::vector<std::string> subjects;
    std::unordered_map<std::string, std::size_t> subject_index;
    std::vector<std::vector<std::vector<std::pair<double, double>>>> cov_rows, resp_rows;
    bool any_response = false;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 5) throw Error(ErrorCode::MalformedRow, where + ": expected 5 fields");
        const std::string subject(trim(fields[0]));
        const std::string variable(trim(fields[1]));
        const std::string_view role_text = trim(fields[2]);
        if (subject.empty() || variable.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty identifier");
        Role role;
        if (role_text == "covariate")
            role = Role::Covariate;
        else if (role_text == "response")
            role = Role::Response;
        else
            throw Error(ErrorCode::MalformedRow, where + ": role must be 'covariate' or 'response'");
        double t = 0.0, v = 0.0;
        if (!parse_real(fields[3], t) || !parse_real(fields[4], v))
            throw Error(ErrorCode::MalformedRow, where + ": non-numeric time or value");

        auto it = variables.find(variable);
        if (it == variables.end())
            throw Error(ErrorCode::MalformedRow, where + ": undeclared variable '" + variable + "'");
        if (it->second.first != role)
            throw Error(ErrorCode::MalformedRow, where + ": variable '" + variable + "' has the wrong role");
        const Interval& domain = role == Role::Covariate ? schema.covariate_domain : schema.response_domain;
        if (!domain.contains(t))
            throw Error(ErrorCode::DomainViolation, where + ": time " + format_double(t) + " outside [" +
                                                        format_double(domain.lo) + ", " + format_double(domain.hi) + "]");

        auto [pos, inserted] = subject_index.try_emplace(subject, subjects.size());
        if (inserted) {
            subjects.push_back(subject);
            cov_rows.emplace_back(schema.covariates.size());
            resp_rows.emplace_back(schema.responses.size());
        }
        if (role == Role::Covariate) {
            cov_rows[pos->second][it->second.second].emplace_back(t, v);
        } else {
            resp_rows[pos->second][it->second.second].emplace_back(t, v);
            any_response = true;
        }
    }

    FunctionalDataset data;
    data.covariate_domain = schema.covariate_domain;
    data.response_domain = schema.response_domain;
    data.covariate_names = schema.covariates;
    data.response_names = schema.responses;
    data.subject_ids = subjects;

    auto build = [&](std::vector<std::pair<double, double>>& rows, const std::string& subject,
                     const std::string& variable) {
        if (rows.empty())
            throw Error(ErrorCode::MissingChannel, "subject '" + subject + "' lacks variable '" + variable + "'");
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        ObservationSeries s;
        s.times.resize(static_cast<Index>(rows.size()));
        s.values.resize(static_cast<Index>(rows.size()));
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (j > 0 && rows[j].first == rows[j - 1].first)
                throw Error(ErrorCode::DuplicateTimestamp, "subject '" + subject + "' variable '" + variable +
                                                               "' repeats time " + format_double(rows[j].first));
            s.times[static_cast<Index>(j)] = rows[j].first;
            s.values[static_cast<Index>(j)] = rows[j].second;
        }
        return s;
    };

    for (std::size_t i = 0; i < subjects.size(); ++i) {
        std::vector<ObservationSeries> covs;
        for (std::size_t r = 0; r < schema.covariates.size(); ++r)
            covs.push_back(build(cov_rows[i][r], subjects[i], schema.covariates[r]));
        data.covariates.push_back(std::move(covs));
        if (any_response) {
            std::vector<ObservationSeries> resps;
            for (std::size_t d = 0; d < schema.responses.size(); ++d)
                resps.push_back(build(resp_rows[i][d], subjects[i], schema.responses[d]));
            data.responses.push_back(std::move(resps));
        }
    }
    validate_dataset(data, options);
    return data;
}

FunctionalDataset load_dataset(const std::filesystem::path& path, const Schema& schema, LoadOptions options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_dataset(in, schema, options);
}

void write_dataset(std::ostream& out, const FunctionalDataset& data) {
    out << kHeader << '\n';
    auto emit = [&](const std::string& subject, const std::string& variable, const char* role,
                    const ObservationSeries& s) {
        for (Index j = 0; j < s.size(); ++j)
            out << subject << ',' << variable << ',' << role << ',' << format_double(s.times[j]) << ','
                << format_double(s.values[j]) << '\n';
    };
    for (std::size_t i = 0; i < data.n_subjects(); ++i) {
        for (std::size_t r = 0; r < data.n_covariates(); ++r)
            emit(data.subject_ids[i], data.covariate_names[r], "covariate", data.covariates[i][r]);
        if (!data.has_responses()) continue;
        for (std::size_t d = 0; d < data.n_responses(); ++d)
            emit(data.subject_ids[i], data.response_names[d], "response", data.responses[i][d]);
    }
}

void save_dataset(const std::filesystem::path& path, const FunctionalDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    write_dataset(out, data);
}

Schema parse_schema(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::BadConfig, std::string("schema: ") + e.what());
    }
    Schema schema;
    try {
        schema.covariates = j.at("covariates").get<std::vector<std::string>>();
        schema.responses = j.at("responses").get<std::vector<std::string>>();
        schema.covariate_domain = parse_interval(j, "covariate_domain");
        schema.response_domain = parse_interval(j, "response_domain");
        if (j.contains("grid_size")) {
            const auto& g = j.at("grid_size");
            schema.covariate_grid_size = g.value("covariate", schema.covariate_grid_size);
            schema.response_grid_size = g.value("response", schema.response_grid_size);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadConfig, std::string("schema: ") + e.what());
    }
    if (schema.covariates.empty() || schema.responses.empty())
        throw Error(ErrorCode::BadConfig, "schema needs at least one covariate and one response");
    std::set<std::string> seen;
    for (const auto* list : {&schema.covariates, &schema.responses})
        for (const auto& name : *list)
            if (!seen.insert(name).second) throw Error(ErrorCode::BadConfig, "variable '" + name + "' declared twice");
    return schema;
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_schema(buffer.str());
}

std::string schema_to_json(const Schema& schema) {
    nlohmann::ordered_json j;
    j["covariates"] = schema.covariates;
    j["responses"] = schema.responses;
    j["covariate_domain"] = {schema.covariate_domain.lo, schema.covariate_domain.hi};
    j["response_domain"] = {schema.response_domain.lo, schema.response_domain.hi};
    j["grid_size"] = {{"covariate", schema.covariate_grid_size}, {"response", schema.response_grid_size}};
    return j.dump(2) + "\n";
}

Schema schema_of(const FunctionalDataset& data, Index covariate_grid, Index response_grid) {
    Schema s;
    s.covariates = data.covariate_names;
    s.responses = data.response_names;
    s.covariate_domain = data.covariate_domain;
    s.response_domain = data.response_domain;
    s.covariate_grid_size = covariate_grid;
    s.response_grid_size = response_grid;
    return s;
}

}  // namespace fofr
