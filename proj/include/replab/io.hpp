#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "replab/env.hpp"
#include "replab/source_train.hpp"
#include "replab/target_adapt.hpp"

namespace replab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Matrices are flattened row-major in every JSON document.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

json env_to_json(const TaskEnvironment& env);
TaskEnvironment env_from_json(const json& j);

json source_solution_to_json(const SourceSolution& sol);

json target_task_to_json(const TargetTask& task);
TargetTask target_task_from_json(const json& j);

json finetune_result_to_json(const FineTuneResult& res, const TargetTask& task);

// Verifies {"schema_version": 1, "kind": <kind>}; throws on mismatch.
void check_schema(const json& j, const std::string& kind);

void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);

// Dataset CSV: header "x0,...,x{d-1},y", one sample per line, label last,
// LF line endings.
void dataset_to_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset dataset_from_csv(const std::filesystem::path& path);

// PGD trace CSV: iteration, loss, parameter norm.
void trace_to_csv(const PGDTrace& trace, const std::filesystem::path& path);

// Shortest round-trip decimal representation (what the JSON layer emits).
std::string format_double(double v);

// FNV-1a 64-bit hash, as a 16-digit hex string.
std::string fnv1a_hex(const std::string& s);

}  // namespace replab
