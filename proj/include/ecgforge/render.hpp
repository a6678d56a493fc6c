#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ecgforge/record.hpp"

namespace ecgforge {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

enum class Layout { grid_3x4_plus_rhythm, stacked_12 };

struct RenderStyle {
    double paper_speed_mm_per_s = 25.0;
    double gain_mm_per_mv = 10.0;
    double pixels_per_mm = 4.0;
    Layout layout = Layout::grid_3x4_plus_rhythm;
    bool minor_grid = true;
    bool major_grid = true;
    Rgb background{255, 240, 240};
    Rgb minor_grid_color{255, 200, 200};
    Rgb major_grid_color{250, 150, 150};
    Rgb trace_color{20, 20, 20};
    double margin_mm = 5.0;
    double row_height_mm = 30.0;
    double calibration_pulse_s = 0.2;

    void validate() const;
};

struct Viewport {
    std::string lead_name;
    int x = 0, y = 0, width = 0, height = 0;  // pixels
    int baseline_y = 0;                       // absolute pixel row of 0 mV
    Eigen::Index sample_begin = 0, sample_end = 0;  // rendered slice
};

struct CanvasGeometry {
    int width_px = 0;
    int height_px = 0;
    double segment_seconds = 0.0;
    std::vector<Viewport> viewports;
};

/// Simple 24-bit RGB raster.
struct Image {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // rgb rows, no padding

    Image(int w, int h, Rgb fill);
    void set(int x, int y, Rgb c);
    Rgb get(int x, int y) const;
};

CanvasGeometry compute_canvas_geometry(const EcgRecord& record, const RenderStyle& style);

/// Renders into memory; tests inspect pixels here.
Image render_to_image(const EcgRecord& record, const RenderStyle& style);

/// Deterministic PNG output (fixed zlib settings, no ancillary chunks).
void render_12lead(const EcgRecord& record, const RenderStyle& style,
                   const std::filesystem::path& out_path);

void write_png(const Image& image, const std::filesystem::path& out_path);

}  // namespace ecgforge
