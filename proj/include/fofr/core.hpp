#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fofr/error.hpp"
#include "fofr/types.hpp"

namespace fofr {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool contains(double t) const { return t >= lo && t <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Builds a validated interval; throws BadConfig unless lo < hi.
Interval make_interval(double lo, double hi);

/// One variable's irregular time series for one subject.
struct ObservationSeries {
    Vector times;
    Vector values;

    Index size() const { return times.size(); }
    bool operator==(const ObservationSeries& other) const {
        return times.size() == other.times.size() && times == other.times && values == other.values;
    }
};

/// Checks equal lengths, M >= 1, strictly increasing times inside `domain`.
void validate_series(const ObservationSeries& series, const Interval& domain, const std::string& label);

enum class Role { Covariate, Response };

/// Minimum number of distinct pooled observation times per channel.
inline constexpr std::size_t kMinPooledTimes = 10;
/// Fraction of the declared interval the pooled times must span.
inline constexpr double kMinCoverageFraction = 0.9;

struct FunctionalDataset {
    Interval covariate_domain;
    Interval response_domain;
    std::vector<std::string> subject_ids;
    std::vector<std::string> covariate_names;
    std::vector<std::string> response_names;
    /// covariates[i][r], responses[i][d]; responses empty for prediction-only data.
    std::vector<std::vector<ObservationSeries>> covariates;
    std::vector<std::vector<ObservationSeries>> responses;

    std::size_t n_subjects() const { return subject_ids.size(); }
    std::size_t n_covariates() const { return covariate_names.size(); }
    std::size_t n_responses() const { return response_names.size(); }
    bool has_responses() const { return !responses.empty(); }

    /// All subjects' series for one channel, in subject order.
    std::vector<ObservationSeries> channel(Role role, std::size_t index) const;

    /// Dataset restricted to the listed subject positions (in the given order).
    FunctionalDataset subset(const std::vector<std::size_t>& rows) const;

    bool operator==(const FunctionalDataset&) const = default;
};

/// Declared layout of a CSV dataset.
struct Schema {
    std::vector<std::string> covariates;
    std::vector<std::string> responses;
    Interval covariate_domain;
    Interval response_domain;
    Index covariate_grid_size = 101;
    Index response_grid_size = 101;
};

Schema parse_schema(const std::string& json_text);
Schema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const Schema& schema);
Schema schema_of(const FunctionalDataset& data, Index covariate_grid = 101, Index response_grid = 101);

struct LoadOptions {
    /// Training data: enforce N >= 2, responses present and pooled coverage.
    /// Prediction data: responses optional and coverage is not checked.
    bool training = true;
};

/// Parses the long CSV format `subject_id,variable_id,role,time,value`.
FunctionalDataset read_dataset(std::istream& in, const Schema& schema, LoadOptions options = {});
FunctionalDataset load_dataset(const std::filesystem::path& path, const Schema& schema, LoadOptions options = {});

void write_dataset(std::ostream& out, const FunctionalDataset& data);
void save_dataset(const std::filesystem::path& path, const FunctionalDataset& data);

/// Re-runs every dataset invariant (used after programmatic construction).
void validate_dataset(const FunctionalDataset& data, LoadOptions options = {});

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace fofr
