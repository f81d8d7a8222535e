// Binary checkpoints for toy models and result files for trajectories.
//
// Checkpoint layout, all integers and floats little-endian:
//   8 bytes  "CULCKPT1"
//   u32      format version (1)
//   u32      layer count L
//   L x (u32 rows, u32 cols)
//   f64 payload: per layer, the row-major weights then the bias

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cul/optimizer.hpp"
#include "cul/unlearn/model.hpp"

namespace cul {

inline constexpr std::uint32_t kCheckpointVersion = 1;

[[nodiscard]] std::vector<std::uint8_t> encode_checkpoint(const unlearn::ToyModel& model);
[[nodiscard]] unlearn::ToyModel decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const unlearn::ToyModel& model, const std::filesystem::path& path);
[[nodiscard]] unlearn::ToyModel load_checkpoint(const std::filesystem::path& path);

struct ResultRow {
    std::string phase;
    std::optional<double> epsilon;
    std::uint64_t iter = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    double grad_f1_norm = 0.0;
    double g_norm = 0.0;
    double eta = 0.0;
    double psi = 0.0;
    std::int64_t wall_ms = 0;
};

enum class ResultFormat { CSV, JSON };

inline constexpr const char* kResultHeader = "phase,epsilon,iter,f1,f2,grad_f1_norm,g_norm,eta,psi,wall_ms";

[[nodiscard]] ResultRow to_row(const std::string& phase, std::optional<double> epsilon, const TrajectoryRecord& r);
[[nodiscard]] std::vector<ResultRow> to_rows(const std::string& phase, std::optional<double> epsilon,
                                             const Trajectory& t);

/// Decimal text with 17 significant digits; parses back to the same double.
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] double parse_double(const std::string& text);

[[nodiscard]] std::string render_csv(const std::vector<ResultRow>& rows);
[[nodiscard]] std::string render_json(const std::vector<ResultRow>& rows);
[[nodiscard]] std::vector<ResultRow> parse_csv(const std::string& text);

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, ResultFormat format);
[[nodiscard]] std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Numeric table with a header line, values at 17 significant digits.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

void write_text(const std::filesystem::path& path, const std::string& content);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace cul
