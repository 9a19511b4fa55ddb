#pragma once

#include "msfa/embedding.hpp"
#include "msfa/fusion.hpp"
#include "msfa/simulator.hpp"

#include <string>
#include <vector>

namespace msfa {

/// Integer epoch seconds, or ISO-8601 "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM]".
Timestamp parse_timestamp(const std::string& text);
/// ISO-8601 UTC, e.g. 2021-04-01T00:00:00Z.
std::string format_timestamp(Timestamp t);
/// Shortest decimal that round-trips to the same binary64 value.
std::string format_double(double v);

/// CSV with header `timestamp,<channel...>`.
TimeSeriesFrame read_frame_csv(const std::string& path);
void write_frame_csv(const TimeSeriesFrame& frame, const std::string& path);

struct TruthTable {
  std::vector<Timestamp> timestamps;
  std::vector<int> labels;
  std::vector<HealthStatus> status;
};

/// CSV with header `timestamp,pattern,status`.
void write_truth_csv(const LabeledDataset& data, const std::string& path);
TruthTable read_truth_csv(const std::string& path);

struct ResultsTable {
  std::vector<Timestamp> timestamps;
  std::vector<Quad> bips;
  std::vector<HealthStatus> status;
};

/// CSV with header `timestamp,bip_ss,bip_sr,bip_ds,bip_dr,status`.
void write_results_csv(const StreamResult& result, const std::string& path);
std::string results_csv(const StreamResult& result);
ResultsTable read_results_csv(const std::string& path);

}  // namespace msfa
