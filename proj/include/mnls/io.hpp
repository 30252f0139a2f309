#pragma once

// =============================================================================
// Potential presets, run configuration files and the binary array format.
//
// Binary layout (little-endian): "MNLS", u32 version, u32 role, i32 p, i32 q,
// i32 sigma, u32 reserved, f64 grid start, f64 grid step, u64 grid count,
// u64 text length, text header, then float64 interleaved complex payload.
// =============================================================================

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mnls/core.hpp"
#include "mnls/defocusing.hpp"
#include "mnls/focusing.hpp"
#include "mnls/scattering.hpp"

namespace mnls {

// =============================================================================
// Potential presets
// =============================================================================

enum class PotentialKind { Gaussian, Sech, Box, GpSymmetric, File };

/// Gaussian: a e^{-((x-c)/w)^2} E, sech: a sech((x-c)/w) E, box: a E on |x - c| < w,
/// gp-symmetric: e^{-((x-c)/w)^2} [[q1, q0], [q0, q-1]], file: samples read from `path`.
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Gaussian;
    int p = 1;
    int q = 1;
    int sigma = 1;
    double amplitude = 1.0;
    /// p x q direction; empty selects the rank-one ones/sqrt(pq) matrix (unit spectral norm).
    RowMat direction;
    double width = 1.0;
    double center = 0.0;
    cplx q_plus{0.1, 0.0};
    cplx q_zero{0.3, 0.0};
    cplx q_minus{0.1, 0.0};
    std::string path;

    [[nodiscard]] RowMat matrix() const;
    [[nodiscard]] std::string describe() const;
};

/// Parses "kind:key=value,..." (keys: amp, width, center, p, q, sigma, q1, q0, qm1, dir, path),
/// a YAML file (*.yaml, *.yml) with the same keys plus `kind`, or a binary field file (*.mnls).
/// `dir` is a row-major list of complex entries separated by ';', e.g. dir=1;0;0;1i.
[[nodiscard]] PotentialSpec parse_potential_spec(const std::string& text);

[[nodiscard]] const char* kind_name(PotentialKind kind);

/// Samples the preset on the grid. Closed-form kinds also carry the exact profile. Throws
/// WindowError if |Q| exceeds 1e-10 at either end of the window (box kinds included).
[[nodiscard]] PotentialField materialize(const PotentialSpec& spec, const Grid1D& grid);

/// Parses a complex literal: "1.5", "-2i", "0.3+0.1i", "(0.3,0.1)".
[[nodiscard]] cplx parse_complex(const std::string& text);

// =============================================================================
// Run configuration
// =============================================================================

/// Reads the flat configuration keys; unknown keys are rejected.
[[nodiscard]] RunConfig load_run_config(const std::string& path);
[[nodiscard]] RunConfig parse_run_config(const std::string& yaml_text);
[[nodiscard]] std::string dump_run_config(const RunConfig& config);

// =============================================================================
// Binary format
// =============================================================================

inline constexpr std::uint32_t kFormatVersion = 1;

enum class Role : std::uint32_t { Field = 1, Scattering = 2, Jump = 3, Contour = 4, FocusingJump = 5 };

[[nodiscard]] std::string serialize(const PotentialField& field);
[[nodiscard]] std::string serialize(const ScatteringData& sd);
[[nodiscard]] std::string serialize(const JumpFactorization& jump);
[[nodiscard]] std::string serialize(const Contour& contour);
[[nodiscard]] std::string serialize(const FocusingJump& jump, const EtaOptions& eta = {});

/// Role of an encoded object; throws FormatError on a bad magic, version or truncation.
[[nodiscard]] Role peek_role(const std::string& bytes);

[[nodiscard]] PotentialField deserialize_field(const std::string& bytes);
[[nodiscard]] ScatteringData deserialize_scattering(const std::string& bytes);
[[nodiscard]] JumpFactorization deserialize_jump(const std::string& bytes);
[[nodiscard]] Contour deserialize_contour(const std::string& bytes);
/// Rebuilds the contour, eta factors and conjugated jumps from the stored raw data.
[[nodiscard]] FocusingJump deserialize_focusing_jump(const std::string& bytes);

[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// =============================================================================
// Text outputs
// =============================================================================

/// Columns: x, then re/im of every entry Q_rs.
void write_field_csv(std::ostream& os, const PotentialField& field);
/// Columns: k, then re/im of every entry of R = B D^-1 (nan where det D vanishes), |det D|.
void write_scattering_csv(std::ostream& os, const ScatteringData& sd);

/// Ordered "key: value" report.
class Report {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long value);
    void set_bool(const std::string& key, bool value);
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Line chart of several series over a shared abscissa.
[[nodiscard]] std::string svg_line_chart(const std::string& title, const std::vector<double>& x,
                                         const std::vector<std::pair<std::string, std::vector<double>>>& series);

} // namespace mnls
