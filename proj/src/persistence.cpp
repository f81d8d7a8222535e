#include "cul/persistence.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include "json.hpp"

#include "cul/errors.hpp"

namespace cul {

namespace {

constexpr char kMagic[8] = {'C', 'U', 'L', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

double get_f64(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void need(std::span<const std::uint8_t> b, std::size_t at, std::size_t n, const char* what) {
    if (b.size() < at + n) {
        throw FormatError(std::string("checkpoint truncated in ") + what, b.size());
    }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const unlearn::ToyModel& model) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    const auto shapes = model.layer_shapes();
    put_u32(out, static_cast<std::uint32_t>(shapes.size()));
    for (const auto& [rows, cols] : shapes) {
        put_u32(out, rows);
        put_u32(out, cols);
    }
    const ParamVector& p = model.params();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        put_f64(out, p[i]);
    }
    return out;
}

unlearn::ToyModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) {
        if (i >= bytes.size() || bytes[i] != static_cast<std::uint8_t>(kMagic[i])) {
            throw FormatError("bad checkpoint magic", i);
        }
    }
    need(bytes, 8, 4, "version");
    const std::uint32_t version = get_u32(bytes, 8);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
    }
    need(bytes, 12, 4, "layer count");
    const std::uint32_t layers = get_u32(bytes, 12);
    if (layers == 0) {
        throw FormatError("checkpoint declares no layers", 12);
    }
    need(bytes, 16, static_cast<std::size_t>(layers) * 8, "layer shapes");
    std::vector<int> widths;
    std::uint64_t floats = 0;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::size_t at = 16 + static_cast<std::size_t>(l) * 8;
        const std::uint32_t rows = get_u32(bytes, at);
        const std::uint32_t cols = get_u32(bytes, at + 4);
        if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
            throw FormatError("invalid layer shape " + std::to_string(rows) + "x" + std::to_string(cols), at);
        }
        if (l == 0) {
            widths.push_back(static_cast<int>(cols));
        } else if (static_cast<int>(cols) != widths.back()) {
            throw FormatError("layer " + std::to_string(l) + " input width does not match the previous output",
                              at + 4);
        }
        widths.push_back(static_cast<int>(rows));
        floats += static_cast<std::uint64_t>(rows) * (cols + 1);
    }
    const std::size_t payload_at = 16 + static_cast<std::size_t>(layers) * 8;
    const std::uint64_t payload_bytes = floats * 8;
    if (bytes.size() - payload_at < payload_bytes) {
        throw FormatError("checkpoint payload truncated: shapes declare " + std::to_string(payload_bytes) +
                              " bytes, " + std::to_string(bytes.size() - payload_at) + " present",
                          bytes.size());
    }
    if (bytes.size() - payload_at > payload_bytes) {
        throw FormatError("trailing bytes after checkpoint payload", payload_at + payload_bytes);
    }
    unlearn::ToyModel model(widths);
    ParamVector p(static_cast<Eigen::Index>(floats));
    for (std::uint64_t i = 0; i < floats; ++i) {
        p[static_cast<Eigen::Index>(i)] = get_f64(bytes, payload_at + 8 * i);
    }
    model.set_params(p);
    return model;
}

void save_checkpoint(const unlearn::ToyModel& model, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(model);
    write_text(path, std::string(bytes.begin(), bytes.end()));
}

unlearn::ToyModel load_checkpoint(const std::filesystem::path& path) {
    const std::string raw = read_text(path);
    const std::vector<std::uint8_t> bytes(raw.begin(), raw.end());
    return decode_checkpoint(bytes);
}

ResultRow to_row(const std::string& phase, std::optional<double> epsilon, const TrajectoryRecord& r) {
    return ResultRow{phase, epsilon, r.iter, r.f1, r.f2, r.norm_grad_f1, r.norm_g, r.eta, r.psi, r.wall_ms};
}

std::vector<ResultRow> to_rows(const std::string& phase, std::optional<double> epsilon, const Trajectory& t) {
    std::vector<ResultRow> rows;
    rows.reserve(t.size());
    for (const auto& r : t.records) {
        rows.push_back(to_row(phase, epsilon, r));
    }
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        // from_chars rejects "inf"/"nan" spellings produced by some writers.
        if (text == "inf") return HUGE_VAL;
        if (text == "-inf") return -HUGE_VAL;
        throw InvalidArgument("not a number: '" + text + "'");
    }
    return v;
}

std::string render_csv(const std::vector<ResultRow>& rows) {
    std::string out = kResultHeader;
    out += '\n';
    for (const auto& r : rows) {
        if (r.phase.find_first_of(",\n\"") != std::string::npos) {
            throw InvalidArgument("result phase label may not contain commas, quotes or newlines");
        }
        out += r.phase;
        out += ',';
        if (r.epsilon) out += format_double(*r.epsilon);
        out += ',' + std::to_string(r.iter);
        for (double v : {r.f1, r.f2, r.grad_f1_norm, r.g_norm, r.eta, r.psi}) {
            out += ',' + format_double(v);
        }
        out += ',' + std::to_string(r.wall_ms) + '\n';
    }
    return out;
}

std::string render_json(const std::vector<ResultRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["phase"] = r.phase;
        o["epsilon"] = r.epsilon ? nlohmann::ordered_json(*r.epsilon) : nlohmann::ordered_json(nullptr);
        o["iter"] = r.iter;
        o["f1"] = r.f1;
        o["f2"] = r.f2;
        o["grad_f1_norm"] = r.grad_f1_norm;
        o["g_norm"] = r.g_norm;
        o["eta"] = r.eta;
        o["psi"] = r.psi;
        o["wall_ms"] = r.wall_ms;
        arr.push_back(std::move(o));
    }
    return arr.dump(1) + "\n";
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kResultHeader) {
        throw FormatError("result CSV header mismatch", 0);
    }
    std::vector<ResultRow> rows;
    std::size_t offset = line.size() + 1;
    while (std::getline(in, line)) {
        if (line.empty()) {
            offset += 1;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 10) {
            throw FormatError("result CSV row has " + std::to_string(cells.size()) + " fields, expected 10", offset);
        }
        try {
            ResultRow r;
            r.phase = cells[0];
            if (!cells[1].empty()) r.epsilon = parse_double(cells[1]);
            r.iter = std::stoull(cells[2]);
            r.f1 = parse_double(cells[3]);
            r.f2 = parse_double(cells[4]);
            r.grad_f1_norm = parse_double(cells[5]);
            r.g_norm = parse_double(cells[6]);
            r.eta = parse_double(cells[7]);
            r.psi = parse_double(cells[8]);
            r.wall_ms = std::stoll(cells[9]);
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw FormatError(std::string("bad result CSV row: ") + e.what(), offset);
        }
        offset += line.size() + 1;
    }
    return rows;
}

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, ResultFormat format) {
    write_text(path, format == ResultFormat::CSV ? render_csv(rows) : render_json(rows));
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += (i ? "," : "") + header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw InvalidArgument("write_table: row width differs from header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += (i ? "," : "") + format_double(row[i]);
        }
        out += '\n';
    }
    write_text(path, out);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) {
        throw IoError("read from '" + path.string() + "' failed");
    }
    return s;
}

}  // namespace cul
