#include "attune/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "attune/error.hpp"
#include "attune/io.hpp"
#include "attune/tuner.hpp"

namespace attune {

RegionView extract_regions(const Matrix& attn, std::size_t d_c, std::size_t hw) {
    const std::size_t side = d_c + hw;
    if (attn.rows() != side || attn.cols() != side) {
        throw DimMismatchError("map is " + std::to_string(attn.rows()) + "x" +
                               std::to_string(attn.cols()) + ", expected " +
                               std::to_string(side) + " square for d_c=" +
                               std::to_string(d_c) + ", hw=" + std::to_string(hw));
    }
    RegionView view;
    view.d_c = d_c;
    view.hw = hw;
    view.t2t = Matrix(d_c, d_c);
    view.t2i = Matrix(d_c, hw);
    view.i2t = Matrix(hw, d_c);
    view.i2i = Matrix(hw, hw);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            const double v = attn(r, c);
            if (r < d_c) {
                if (c < d_c) view.t2t(r, c) = v;
                else view.t2i(r, c - d_c) = v;
            } else {
                if (c < d_c) view.i2t(r - d_c, c) = v;
                else view.i2i(r - d_c, c - d_c) = v;
            }
        }
    }
    return view;
}

Matrix reassemble(const RegionView& view) {
    const std::size_t side = view.d_c + view.hw;
    Matrix out(side, side);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            double v;
            if (r < view.d_c) {
                v = c < view.d_c ? view.t2t(r, c) : view.t2i(r, c - view.d_c);
            } else {
                v = c < view.d_c ? view.i2t(r - view.d_c, c)
                                 : view.i2i(r - view.d_c, c - view.d_c);
            }
            out(r, c) = v;
        }
    }
    return out;
}

Matrix token_heatmap(const RegionView& view, std::size_t token, std::size_t h, std::size_t w) {
    if (token >= view.d_c) {
        throw BadTokenError("token " + std::to_string(token) + " outside [0," +
                            std::to_string(view.d_c) + ")");
    }
    if (h * w != view.hw) {
        throw DimMismatchError("h*w does not match the map's image-token count");
    }
    Matrix grid(h, w);
    for (std::size_t p = 0; p < view.hw; ++p) {
        grid.data()[p] = view.i2t(p, token);
    }
    return grid;
}

std::vector<LayerRangeStats> layer_range_stats(const std::vector<CaptureRecord>& captures,
                                               const std::vector<LayerRange>& ranges,
                                               const PromptSpec& spec) {
    const std::size_t d_c = spec.token_count;
    std::vector<LayerRangeStats> out;
    constexpr TokenClass kClasses[] = {TokenClass::Attribute, TokenClass::Instance,
                                       TokenClass::Background, TokenClass::Filler};
    for (const LayerRange& range : ranges) {
        bool any_capture = false;
        std::map<TokenClass, std::pair<double, double>> acc;  // class -> (sum, max)
        std::map<TokenClass, std::size_t> counts;
        for (const CaptureRecord& rec : captures) {
            if (!range.contains(rec.layer)) continue;
            any_capture = true;
            const std::size_t side = rec.attention.rows();
            if (side <= d_c) {
                throw DimMismatchError("capture map smaller than the prompt's token count");
            }
            const std::size_t hw = side - d_c;
            for (std::size_t j = 0; j < d_c; ++j) {
                const TokenClass cls = spec.token_classes[j];
                auto& [sum, mx] = acc[cls];
                auto& n = counts[cls];
                for (std::size_t p = 0; p < hw; ++p) {
                    const double v = rec.attention(d_c + p, j);
                    sum += v;
                    mx = std::max(mx, v);
                    ++n;
                }
            }
        }
        if (!any_capture) {
            throw EmptyRangeError("no captures in layer range " + std::to_string(range.lo) +
                                  "-" + std::to_string(range.hi));
        }
        const std::string label = std::to_string(range.lo) + "-" + std::to_string(range.hi);
        for (TokenClass cls : kClasses) {
            const auto it = acc.find(cls);
            if (it == acc.end() || counts[cls] == 0) continue;
            LayerRangeStats s;
            s.range_label = label;
            s.token_class = cls;
            s.mean = it->second.first / static_cast<double>(counts[cls]);
            s.max = it->second.second;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<std::pair<double, double>> scaling_curve(double lambda, int total_steps,
                                                     int step_index, int m,
                                                     std::size_t samples) {
    if (samples < 2) throw DimError("scaling_curve needs at least 2 samples");
    const double b = beta({lambda, total_steps, step_index});
    std::vector<std::pair<double, double>> curve;
    curve.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(samples - 1);
        curve.emplace_back(a, a * std::exp(b * (static_cast<double>(m) - a)));
    }
    return curve;
}

namespace {

Region region_from_string(const std::string& s) {
    if (s == "T2T") return Region::T2T;
    if (s == "T2I") return Region::T2I;
    if (s == "I2T") return Region::I2T;
    if (s == "I2I") return Region::I2I;
    throw FormatError("captures csv: unknown region `" + s + "`");
}

}  // namespace

void write_captures_csv(std::ostream& out, const std::vector<CaptureRecord>& captures,
                        std::size_t d_c, std::size_t hw) {
    out << "layer,step,region,row,col,value\n";
    for (const CaptureRecord& rec : captures) {
        const RegionView view = extract_regions(rec.attention, d_c, hw);
        auto emit = [&](const Matrix& block, const char* name) {
            for (std::size_t r = 0; r < block.rows(); ++r) {
                for (std::size_t c = 0; c < block.cols(); ++c) {
                    out << rec.layer << ',' << rec.step << ',' << name << ',' << r << ',' << c
                        << ',' << format_double(block(r, c)) << '\n';
                }
            }
        };
        emit(view.t2t, "T2T");
        emit(view.t2i, "T2I");
        emit(view.i2t, "I2T");
        emit(view.i2i, "I2I");
    }
}

std::vector<CaptureRecord> read_captures_csv(std::istream& in) {
    struct Cell {
        Region region;
        std::size_t row, col;
        double value;
    };
    std::map<std::pair<int, int>, std::vector<Cell>> groups;  // (step, layer) keeps file order stable
    std::vector<std::pair<int, int>> order;

    std::string line;
    if (!std::getline(in, line)) throw FormatError("captures csv: empty file");
    if (line != "layer,step,region,row,col,value") {
        throw FormatError("captures csv: bad header");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string field;
        auto next = [&]() {
            if (!std::getline(iss, field, ',')) {
                throw FormatError("captures csv line " + std::to_string(line_no) + ": short row");
            }
            return field;
        };
        try {
            const int layer = std::stoi(next());
            const int step = std::stoi(next());
            const Region region = region_from_string(next());
            const std::size_t row = static_cast<std::size_t>(std::stoul(next()));
            const std::size_t col = static_cast<std::size_t>(std::stoul(next()));
            const double value = std::stod(next());
            const auto key = std::make_pair(step, layer);
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back({region, row, col, value});
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw FormatError("captures csv line " + std::to_string(line_no) + ": bad field");
        }
    }

    std::vector<CaptureRecord> out;
    for (const auto& key : order) {
        const auto& cells = groups[key];
        std::size_t d_c = 0, hw = 0;
        for (const Cell& cell : cells) {
            switch (cell.region) {
                case Region::T2T:
                    d_c = std::max(d_c, std::max(cell.row, cell.col) + 1);
                    break;
                case Region::T2I:
                    d_c = std::max(d_c, cell.row + 1);
                    hw = std::max(hw, cell.col + 1);
                    break;
                case Region::I2T:
                    hw = std::max(hw, cell.row + 1);
                    d_c = std::max(d_c, cell.col + 1);
                    break;
                case Region::I2I:
                    hw = std::max(hw, std::max(cell.row, cell.col) + 1);
                    break;
            }
        }
        if (d_c == 0 || hw == 0) {
            throw FormatError("captures csv: cannot infer map dimensions");
        }
        CaptureRecord rec;
        rec.step = key.first;
        rec.layer = key.second;
        rec.attention = Matrix(d_c + hw, d_c + hw, 0.0);
        for (const Cell& cell : cells) {
            const std::size_t r0 =
                (cell.region == Region::I2T || cell.region == Region::I2I) ? d_c : 0;
            const std::size_t c0 =
                (cell.region == Region::T2I || cell.region == Region::I2I) ? d_c : 0;
            rec.attention(r0 + cell.row, c0 + cell.col) = cell.value;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_stats_csv(std::ostream& out, const std::vector<LayerRangeStats>& stats) {
    out << "range,class,mean,max\n";
    for (const LayerRangeStats& s : stats) {
        out << s.range_label << ',' << to_string(s.token_class) << ','
            << format_double(s.mean) << ',' << format_double(s.max) << '\n';
    }
}

void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve) {
    out << "a,value\n";
    for (const auto& [a, value] : curve) {
        out << format_double(a) << ',' << format_double(value) << '\n';
    }
}

}  // namespace attune
