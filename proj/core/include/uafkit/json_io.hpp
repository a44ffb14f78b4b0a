#pragma once

// JSON and CSV encodings of the library's exchanged values. Doubles are
// written as shortest round-trip decimals, so read(write(v)) == v bitwise.

#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "uafkit/analysis.hpp"
#include "uafkit/fitter.hpp"
#include "uafkit/network.hpp"
#include "uafkit/uaf.hpp"

namespace uafkit {

using Json = nlohmann::json;

/// A JSON document that parsed but does not match the expected schema. The
/// message starts with the dotted path of the offending field.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

Json to_json(const UafParams& p);
UafParams params_from_json(const Json& j, const std::string& path = "params");

Json to_json(const Preset& p);
Json to_json(const ErrorReport& r);
Json to_json(const RmseTable& t);

Json to_json(const FitSpec& spec);
FitSpec fit_spec_from_json(const Json& j);
Json to_json(const FitResult& r);
FitResult fit_result_from_json(const Json& j);

Json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const Json& j);
Json to_json(const TrainReport& r);

/// Header "epoch,loss,metric,A,B,C,D,E"; UAF columns are empty when the
/// activation is not trainable.
void write_trajectory_csv(std::ostream& out, const TrainReport& r);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace uafkit
