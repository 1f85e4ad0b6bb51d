#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "turnpike/market.hpp"
#include "turnpike/numerics.hpp"
#include "turnpike/utility.hpp"

namespace turnpike::cli {

inline constexpr const char* kToolVersion = "turnpike 0.1.0";

enum class Command { robustness, counterexample, incentives, replicate, validate, price_square };
enum class Method { quadrature, montecarlo };
enum class Format { csv, json };

/// Exit codes of the runner.
enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kNumerical = 3,
    kUsage = 64,
    kIo = 74,
};

/// Fully resolved experiment; every field is echoed into the output header.
struct ExperimentConfig {
    Command command = Command::robustness;
    MarketParams market;
    std::string utility;          ///< descriptor, e.g. "shifted:p=-1,a=1"
    std::optional<double> p;      ///< reference power (two-piece p for counterexample)
    double p_star = -3.0;
    double x_hi = 4.0;
    std::vector<double> horizons;
    Method method = Method::quadrature;
    int nodes = 201;
    double x0 = 1.0;
    McConfig mc;
    double alpha = 2.0;
    double kbar = 0.0;
    int strikes = 10000;
    double kmin = 1e-3;
    double kmax = 80.0;
    bool geometric = true;
    double xmin = 0.5;
    double xmax = 20.0;
    int points = 200;
    double s0 = 10.0;
    std::string out = "-";
    Format format = Format::csv;
};

/// Unknown command or malformed command line.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable config file or unwritable output.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

/// Parse a descriptor such as "twopiece:p=-1,pstar=-3,xhi=4" into a utility.
UtilitySpec parse_utility(const std::string& descriptor);

const char* command_name(Command c);

/// Build a config from key/value pairs, applying per-command defaults.
/// Unknown keys or malformed values raise a parameter error.
ExperimentConfig config_from_map(const KeyValues& kv);

/// Canonical key/value form (the output path is not part of it).
KeyValues config_to_map(const ExperimentConfig& cfg);

/// Read "key=value" lines; a leading '#' is allowed, lines without '=' are skipped,
/// and keys under "meta." are ignored, so any CSV output file is itself a config.
/// A file starting with '{' is read as JSON output and its "config" object used.
KeyValues read_config_file(const std::string& path);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> meta;  ///< run diagnostics
};

Table run_experiment(const ExperimentConfig& cfg);

/// CSV with "# key=value" header lines, or a JSON document.
std::string render(const ExperimentConfig& cfg, const Table& table);

/// Parse argv, run, write the output; returns an ExitCode.
int main_entry(int argc, const char* const* argv);

}  // namespace turnpike::cli
