#include "ecgforge/render.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace ecgforge {

void RenderStyle::validate() const {
    if (paper_speed_mm_per_s <= 0 || gain_mm_per_mv <= 0 || pixels_per_mm <= 0 ||
        margin_mm < 0 || row_height_mm <= 0) {
        throw InvalidArgument("render style scale factors must be positive");
    }
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3) {
    for (size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

Rgb Image::get(int x, int y) const {
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

namespace {

int px(double mm, double ppmm) { return static_cast<int>(std::round(mm * ppmm)); }

const std::vector<std::string>& grid_layout_leads() {
    static const std::vector<std::string> order = {
        "I", "aVR", "V1", "V4",
        "II", "aVL", "V2", "V5",
        "III", "aVF", "V3", "V6"};
    return order;
}

// 5x7 glyphs for lead labels.
struct Glyph {
    char ch;
    std::uint8_t rows[7];  // 5 low bits per row, msb-left
};

const Glyph* find_glyph(char ch) {
    static const Glyph table[] = {
        {'I', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x1F}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x0E, 0x11, 0x01, 0x06, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    };
    for (const auto& g : table) {
        if (g.ch == ch) return &g;
    }
    return nullptr;
}

void draw_text(Image& img, int x, int y, const std::string& text, Rgb color) {
    for (char ch : text) {
        if (const Glyph* g = find_glyph(ch)) {
            for (int r = 0; r < 7; ++r) {
                for (int c = 0; c < 5; ++c) {
                    if (g->rows[r] & (1 << (4 - c))) img.set(x + c, y + r, color);
                }
            }
        }
        x += 6;
    }
}

void draw_vline_segment(Image& img, int x, int y0, int y1, Rgb color, int clip_y0, int clip_y1) {
    if (y0 > y1) std::swap(y0, y1);
    y0 = std::max(y0, clip_y0);
    y1 = std::min(y1, clip_y1);
    for (int y = y0; y <= y1; ++y) img.set(x, y, color);
}

}  // namespace

CanvasGeometry compute_canvas_geometry(const EcgRecord& record, const RenderStyle& style) {
    style.validate();
    const double ppmm = style.pixels_per_mm;
    const double speed = style.paper_speed_mm_per_s;
    const double fs = record.sample_rate_hz;

    const int margin = px(style.margin_mm, ppmm);
    const int row_h = px(style.row_height_mm, ppmm);
    const int cal_w = static_cast<int>(std::ceil(style.calibration_pulse_s * speed * ppmm));

    CanvasGeometry geo;
    const int columns = style.layout == Layout::grid_3x4_plus_rhythm ? 4 : 1;
    const int rows = style.layout == Layout::grid_3x4_plus_rhythm ? 4 : 12;
    geo.segment_seconds = style.layout == Layout::grid_3x4_plus_rhythm
                              ? 2.5
                              : record.duration_s();
    const double total_seconds = geo.segment_seconds * columns;
    if (record.duration_s() + 0.5 / fs < total_seconds) {
        throw TooShort("record '" + record.record_id + "' shorter than layout needs (" +
                       std::to_string(total_seconds) + " s)");
    }

    const int seg_w = static_cast<int>(std::ceil(geo.segment_seconds * speed * ppmm));
    geo.width_px = 2 * margin + cal_w + seg_w * columns;
    geo.height_px = 2 * margin + row_h * rows;

    const auto seg_samples = static_cast<Eigen::Index>(std::llround(geo.segment_seconds * fs));
    auto make_vp = [&](const std::string& lead, int row, int col, int col_span,
                       Eigen::Index s_begin, Eigen::Index s_end) {
        Viewport vp;
        vp.lead_name = lead;
        vp.x = margin + cal_w + col * seg_w;
        vp.y = margin + row * row_h;
        vp.width = seg_w * col_span;
        vp.height = row_h;
        vp.baseline_y = vp.y + row_h / 2;
        vp.sample_begin = s_begin;
        vp.sample_end = std::min(s_end, record.sample_count());
        return vp;
    };

    if (style.layout == Layout::grid_3x4_plus_rhythm) {
        const auto& order = grid_layout_leads();
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 4; ++col) {
                const std::string& lead = order[static_cast<size_t>(row * 4 + col)];
                geo.viewports.push_back(make_vp(lead, row, col, 1,
                                                col * seg_samples, (col + 1) * seg_samples));
            }
        }
        geo.viewports.push_back(make_vp("II", 3, 0, 4, 0, 4 * seg_samples));
    } else {
        int row = 0;
        for (const auto& lead : record.leads) {
            geo.viewports.push_back(make_vp(lead.name, row++, 0, 1, 0, record.sample_count()));
        }
    }
    return geo;
}

Image render_to_image(const EcgRecord& record, const RenderStyle& style) {
    record.validate();
    if (style.layout == Layout::grid_3x4_plus_rhythm && record.leads.size() != 12) {
        throw MissingLeads("grid_3x4_plus_rhythm needs all 12 leads, got " +
                           std::to_string(record.leads.size()));
    }
    const CanvasGeometry geo = compute_canvas_geometry(record, style);
    const double ppmm = style.pixels_per_mm;
    const double speed = style.paper_speed_mm_per_s;
    const double fs = record.sample_rate_hz;

    Image img(geo.width_px, geo.height_px, style.background);

    // Grid over the plot area.
    const int margin = px(style.margin_mm, ppmm);
    const int plot_x1 = geo.width_px - margin;
    const int plot_y1 = geo.height_px - margin;
    auto draw_grid = [&](double step_mm, Rgb color) {
        for (double mm = 0.0;; mm += step_mm) {
            const int x = margin + px(mm, ppmm);
            if (x > plot_x1) break;
            for (int y = margin; y <= plot_y1; ++y) img.set(x, y, color);
        }
        for (double mm = 0.0;; mm += step_mm) {
            const int y = margin + px(mm, ppmm);
            if (y > plot_y1) break;
            for (int x = margin; x <= plot_x1; ++x) img.set(x, y, color);
        }
    };
    if (style.minor_grid) draw_grid(1.0, style.minor_grid_color);
    if (style.major_grid) draw_grid(5.0, style.major_grid_color);

    const int cal_h = static_cast<int>(std::round(1.0 * style.gain_mm_per_mv * ppmm));
    const int cal_w = static_cast<int>(std::ceil(style.calibration_pulse_s * speed * ppmm));

    // One calibration pulse per row, in the strip left of the traces.
    std::vector<int> row_baselines;
    for (const auto& vp : geo.viewports) {
        if (vp.x == margin + cal_w) {  // leftmost viewport of its row
            row_baselines.push_back(vp.baseline_y);
        }
    }
    for (int baseline : row_baselines) {
        const int x0 = margin;
        const int lead_in = cal_w / 4;
        const int top = baseline - cal_h;
        for (int x = x0; x < x0 + lead_in; ++x) img.set(x, baseline, style.trace_color);
        draw_vline_segment(img, x0 + lead_in, top, baseline, style.trace_color, 0, geo.height_px - 1);
        for (int x = x0 + lead_in; x <= x0 + cal_w - lead_in; ++x) img.set(x, top, style.trace_color);
        draw_vline_segment(img, x0 + cal_w - lead_in, top, baseline, style.trace_color, 0,
                           geo.height_px - 1);
        for (int x = x0 + cal_w - lead_in; x < x0 + cal_w; ++x) {
            img.set(x, baseline, style.trace_color);
        }
    }

    // Traces. Vertical displacement = round(mV * gain * ppmm) from baseline.
    for (const auto& vp : geo.viewports) {
        const Lead* lead = record.find_lead(vp.lead_name);
        const int clip_y0 = vp.y;
        const int clip_y1 = vp.y + vp.height - 1;
        int prev_x = -1, prev_y = 0;
        for (Eigen::Index i = vp.sample_begin; i < vp.sample_end; ++i) {
            const double t = static_cast<double>(i - vp.sample_begin) / fs;
            const int x = vp.x + static_cast<int>(std::round(t * speed * ppmm));
            if (x >= vp.x + vp.width) break;
            const int y = vp.baseline_y -
                          static_cast<int>(std::round(lead->samples[i] * style.gain_mm_per_mv * ppmm));
            if (prev_x >= 0) {
                if (x == prev_x) {
                    draw_vline_segment(img, x, prev_y, y, style.trace_color, clip_y0, clip_y1);
                } else {
                    draw_vline_segment(img, prev_x, prev_y, y, style.trace_color, clip_y0, clip_y1);
                    if (y >= clip_y0 && y <= clip_y1) img.set(x, y, style.trace_color);
                }
            } else if (y >= clip_y0 && y <= clip_y1) {
                img.set(x, y, style.trace_color);
            }
            prev_x = x;
            prev_y = y;
        }
        draw_text(img, vp.x + 3, vp.y + 2, vp.lead_name, style.trace_color);
    }
    return img;
}

void write_png(const Image& image, const std::filesystem::path& out_path) {
    // Raw scanlines, filter 0, fixed-level zlib: byte-stable output.
    const size_t stride = static_cast<size_t>(image.width) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * static_cast<size_t>(image.height));
    for (int y = 0; y < image.height; ++y) {
        raw[y * (stride + 1)] = 0;
        std::memcpy(raw.data() + y * (stride + 1) + 1, image.pixels.data() + y * stride, stride);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw IoError("zlib compression failed");
    }
    compressed.resize(bound);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path.string());

    auto write_be32 = [](std::uint8_t* p, std::uint32_t v) {
        p[0] = static_cast<std::uint8_t>(v >> 24);
        p[1] = static_cast<std::uint8_t>(v >> 16);
        p[2] = static_cast<std::uint8_t>(v >> 8);
        p[3] = static_cast<std::uint8_t>(v);
    };
    auto write_chunk = [&](const char type[4], const std::uint8_t* data, size_t len) {
        std::uint8_t head[8];
        write_be32(head, static_cast<std::uint32_t>(len));
        std::memcpy(head + 4, type, 4);
        out.write(reinterpret_cast<const char*>(head), 8);
        if (len) out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(len));
        uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
        if (len) crc = crc32(crc, data, static_cast<uInt>(len));
        std::uint8_t tail[4];
        write_be32(tail, static_cast<std::uint32_t>(crc));
        out.write(reinterpret_cast<const char*>(tail), 4);
    };

    static const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    out.write(reinterpret_cast<const char*>(signature), 8);

    std::uint8_t ihdr[13];
    write_be32(ihdr, static_cast<std::uint32_t>(image.width));
    write_be32(ihdr + 4, static_cast<std::uint32_t>(image.height));
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // truecolor
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    write_chunk("IHDR", ihdr, sizeof(ihdr));
    write_chunk("IDAT", compressed.data(), compressed.size());
    write_chunk("IEND", nullptr, 0);
    if (!out) throw IoError("write failed: " + out_path.string());
}

void render_12lead(const EcgRecord& record, const RenderStyle& style,
                   const std::filesystem::path& out_path) {
    write_png(render_to_image(record, style), out_path);
}

}  // namespace ecgforge
