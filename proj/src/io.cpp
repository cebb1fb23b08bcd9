#include "modelmap/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace modelmap {
namespace io {

namespace {

constexpr char kMagic[5] = {'M', 'M', 'A', 'P', '1'};
constexpr unsigned char kBinaryVersion = 1;

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE) {
        std::ostringstream msg;
        msg << "non-numeric cell at row " << row << ", column " << col << ": '"
            << cell << "'";
        throw ParseError(msg.str());
    }
    return v;
}

std::uint64_t parse_u64(const std::string& cell, const char* what) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError(std::string("bad integer for ") + what + ": '" + cell +
                         "'");
    return v;
}

// Reads the next content line; `#` lines are collected as metadata.
bool next_line(std::istream& is, std::string& line, Metadata* meta) {
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (meta) {
                std::string body = line.substr(1);
                if (!body.empty() && body.front() == ' ') body.erase(0, 1);
                const std::size_t tab = body.find('\t');
                if (tab != std::string::npos)
                    meta->add(body.substr(0, tab), body.substr(tab + 1));
            }
            continue;
        }
        return true;
    }
    return false;
}

void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (is.gcount() != 8) throw CorruptFile("truncated binary header");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) throw Error("cannot open for reading: " + path.string());
    return is;
}

}  // namespace

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Metadata::add(std::string key, std::string value) {
    entries_.emplace_back(std::move(key), std::move(value));
}
void Metadata::add(std::string key, double value) {
    add(std::move(key), fmt_g17(value));
}
void Metadata::add(std::string key, std::uint64_t value) {
    add(std::move(key), std::to_string(value));
}

const std::string* Metadata::find(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta.entries()) os << "# " << k << '\t' << v << '\n';
}

LikelihoodMatrix read_matrix_delimited(std::istream& is) {
    std::string line;
    if (!next_line(is, line, nullptr))
        throw ParseError("empty matrix file");

    const std::vector<std::string> header = split_tabs(line);
    if (header.size() < 2) throw ParseError("matrix header needs text ids");
    std::vector<std::string> text_ids(header.begin() + 1, header.end());

    std::vector<std::string> model_ids;
    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (next_line(is, line, nullptr)) {
        const std::vector<std::string> cells = split_tabs(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << row_no << " has " << cells.size()
                << " cells, expected " << header.size();
            throw ParseError(msg.str());
        }
        model_ids.push_back(cells[0]);
        std::vector<double> vals(cells.size() - 1);
        for (std::size_t c = 1; c < cells.size(); ++c)
            vals[c - 1] = parse_double(cells[c], row_no, c);
        rows.push_back(std::move(vals));
        ++row_no;
    }
    if (rows.empty()) throw ParseError("matrix file has no data rows");

    Matrix values(static_cast<Index>(rows.size()),
                  static_cast<Index>(text_ids.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return LikelihoodMatrix{std::move(values), std::move(model_ids),
                            std::move(text_ids), std::nullopt};
}

LikelihoodMatrix read_matrix_binary(std::istream& is) {
    char magic[5];
    is.read(magic, 5);
    if (is.gcount() != 5 || std::memcmp(magic, kMagic, 5) != 0)
        throw UnsupportedFormat("bad magic bytes, expected MMAP1");
    char version = 0;
    is.read(&version, 1);
    if (is.gcount() != 1 ||
        static_cast<unsigned char>(version) != kBinaryVersion)
        throw UnsupportedFormat("unsupported binary version");

    const std::uint64_t K = get_u64_le(is);
    const std::uint64_t N = get_u64_le(is);
    if (K == 0 || N == 0 || K > (1ULL << 32) || N > (1ULL << 32) ||
        K * N > (1ULL << 36))
        throw CorruptFile("implausible matrix dimensions");

    Matrix values(static_cast<Index>(K), static_cast<Index>(N));
    std::vector<unsigned char> buf(static_cast<std::size_t>(N) * 8);
    for (std::uint64_t r = 0; r < K; ++r) {
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(is.gcount()) != buf.size())
            throw CorruptFile("truncated binary payload");
        for (std::uint64_t c = 0; c < N; ++c) {
            std::uint64_t bits = 0;
            for (int b = 7; b >= 0; --b)
                bits = (bits << 8) | buf[c * 8 + static_cast<std::uint64_t>(b)];
            double v;
            std::memcpy(&v, &bits, sizeof v);
            values(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    is.peek();
    if (!is.eof()) throw CorruptFile("trailing bytes after binary payload");

    std::vector<std::string> model_ids(K), text_ids(N);
    for (std::uint64_t r = 0; r < K; ++r) model_ids[r] = "m" + std::to_string(r);
    for (std::uint64_t c = 0; c < N; ++c) text_ids[c] = "t" + std::to_string(c);
    return LikelihoodMatrix{std::move(values), std::move(model_ids),
                            std::move(text_ids), std::nullopt};
}

LikelihoodMatrix read_matrix(const std::filesystem::path& path,
                             MatrixFormat format) {
    if (format == MatrixFormat::autodetect) {
        std::ifstream probe = open_in(path, true);
        char magic[5] = {};
        probe.read(magic, 5);
        format = (probe.gcount() == 5 && std::memcmp(magic, kMagic, 5) == 0)
                     ? MatrixFormat::binary
                     : MatrixFormat::delimited;
    }
    if (format == MatrixFormat::binary) {
        std::ifstream is = open_in(path, true);
        return read_matrix_binary(is);
    }
    std::ifstream is = open_in(path, false);
    return read_matrix_delimited(is);
}

void write_matrix_delimited(std::ostream& os, const LikelihoodMatrix& L,
                            const Metadata& meta) {
    write_metadata(os, meta);
    os << "model_id";
    for (const auto& t : L.text_ids) os << '\t' << t;
    os << '\n';
    for (Index r = 0; r < L.values.rows(); ++r) {
        os << L.model_ids[static_cast<std::size_t>(r)];
        for (Index c = 0; c < L.values.cols(); ++c)
            os << '\t' << fmt_g17(L.values(r, c));
        os << '\n';
    }
}

void write_matrix_binary(std::ostream& os, const LikelihoodMatrix& L) {
    os.write(kMagic, 5);
    const char version = static_cast<char>(kBinaryVersion);
    os.write(&version, 1);
    put_u64_le(os, static_cast<std::uint64_t>(L.values.rows()));
    put_u64_le(os, static_cast<std::uint64_t>(L.values.cols()));
    for (Index r = 0; r < L.values.rows(); ++r)
        for (Index c = 0; c < L.values.cols(); ++c) {
            std::uint64_t bits;
            const double v = L.values(r, c);
            std::memcpy(&bits, &v, sizeof bits);
            put_u64_le(os, bits);
        }
}

void write_matrix(const std::filesystem::path& path, const LikelihoodMatrix& L,
                  const Metadata& meta, MatrixFormat format) {
    if (format == MatrixFormat::binary) {
        std::ofstream os = open_out(path, true);
        write_matrix_binary(os, L);
        return;
    }
    std::ofstream os = open_out(path, false);
    write_matrix_delimited(os, L, meta);
}

void write_square_table(std::ostream& os, const Matrix& values,
                        const std::vector<std::string>& ids,
                        const Metadata& meta) {
    write_metadata(os, meta);
    os << "model_id";
    for (const auto& id : ids) os << '\t' << id;
    os << '\n';
    for (Index r = 0; r < values.rows(); ++r) {
        os << ids[static_cast<std::size_t>(r)];
        for (Index c = 0; c < values.cols(); ++c)
            os << '\t' << fmt_g17(values(r, c));
        os << '\n';
    }
}

void write_plan(std::ostream& os, const SamplingPlan& plan,
                const std::vector<std::string>& text_ids, const Metadata& meta) {
    Metadata full = meta;
    full.add("plan_method", std::string(method_name(plan.method)));
    full.add("plan_N", static_cast<std::uint64_t>(plan.probs.size()));
    full.add("plan_source_hash", plan.source_hash);
    write_metadata(os, full);
    os << "index\ttext_id\tprob\n";
    for (Index s = 0; s < plan.probs.size(); ++s) {
        const auto us = static_cast<std::size_t>(s);
        os << s << '\t'
           << (us < text_ids.size() ? text_ids[us] : "t" + std::to_string(s))
           << '\t' << fmt_g17(plan.probs(s)) << '\n';
    }
}

SamplingPlan read_plan(std::istream& is, std::vector<std::string>* text_ids) {
    Metadata meta;
    std::string line;
    if (!next_line(is, line, &meta)) throw ParseError("empty plan file");
    if (line != "index\ttext_id\tprob")
        throw ParseError("unexpected plan header: " + line);

    std::vector<double> probs;
    std::vector<std::string> ids;
    std::size_t row_no = 1;
    while (next_line(is, line, &meta)) {
        const auto cells = split_tabs(line);
        if (cells.size() != 3) throw ParseError("plan rows need 3 columns");
        ids.push_back(cells[1]);
        probs.push_back(parse_double(cells[2], row_no, 2));
        ++row_no;
    }
    if (probs.empty()) throw ParseError("plan file has no rows");

    SamplingPlan plan;
    plan.probs = Eigen::Map<const Vector>(probs.data(),
                                          static_cast<Index>(probs.size()));
    if (const std::string* m = meta.find("plan_method"))
        plan.method = method_from_name(*m);
    if (const std::string* h = meta.find("plan_source_hash"))
        plan.source_hash = parse_u64(*h, "plan_source_hash");
    if (text_ids) *text_ids = std::move(ids);
    return plan;
}

SamplingPlan read_plan(const std::filesystem::path& path,
                       std::vector<std::string>* text_ids) {
    std::ifstream is = open_in(path, false);
    return read_plan(is, text_ids);
}

void write_draw(std::ostream& os, const ResampleDraw& draw,
                const std::vector<std::string>& text_ids, const Metadata& meta) {
    Metadata full = meta;
    full.add("draw_n", static_cast<std::uint64_t>(draw.n));
    full.add("draw_seed", draw.seed);
    full.add("draw_N", static_cast<std::uint64_t>(draw.population_size));
    write_metadata(os, full);
    os << "index\ttext_id\tcount\tweight\n";
    for (std::size_t t = 0; t < draw.unique_count(); ++t) {
        const auto idx = static_cast<std::size_t>(draw.unique_indices[t]);
        os << draw.unique_indices[t] << '\t'
           << (idx < text_ids.size() ? text_ids[idx]
                                     : "t" + std::to_string(draw.unique_indices[t]))
           << '\t' << draw.counts[t] << '\t'
           << fmt_g17(draw.weights(static_cast<Index>(t))) << '\n';
    }
}

ResampleDraw read_draw(std::istream& is, std::vector<std::string>* text_ids) {
    Metadata meta;
    std::string line;
    if (!next_line(is, line, &meta)) throw ParseError("empty draw file");
    if (line != "index\ttext_id\tcount\tweight")
        throw ParseError("unexpected draw header: " + line);

    ResampleDraw draw;
    std::vector<std::string> ids;
    std::vector<double> weights;
    std::size_t row_no = 1;
    while (next_line(is, line, &meta)) {
        const auto cells = split_tabs(line);
        if (cells.size() != 4) throw ParseError("draw rows need 4 columns");
        draw.unique_indices.push_back(
            static_cast<Index>(parse_u64(cells[0], "index")));
        ids.push_back(cells[1]);
        draw.counts.push_back(parse_u64(cells[2], "count"));
        weights.push_back(parse_double(cells[3], row_no, 3));
        ++row_no;
    }
    draw.weights = Eigen::Map<const Vector>(weights.data(),
                                            static_cast<Index>(weights.size()));
    if (const std::string* v = meta.find("draw_n"))
        draw.n = parse_u64(*v, "draw_n");
    if (const std::string* v = meta.find("draw_seed"))
        draw.seed = parse_u64(*v, "draw_seed");
    if (const std::string* v = meta.find("draw_N"))
        draw.population_size = static_cast<Index>(parse_u64(*v, "draw_N"));
    if (draw.n == 0) throw ParseError("draw file lacks the draw_n key");
    if (text_ids) *text_ids = std::move(ids);
    return draw;
}

ResampleDraw read_draw(const std::filesystem::path& path,
                       std::vector<std::string>* text_ids) {
    std::ifstream is = open_in(path, false);
    return read_draw(is, text_ids);
}

ScoreTable read_scores(const std::filesystem::path& path) {
    std::ifstream is = open_in(path, false);
    std::string line;
    if (!next_line(is, line, nullptr)) throw ParseError("empty score file");
    const auto header = split_tabs(line);
    if (header.size() < 3 || header[0] != "model_id" ||
        header[1] != "model_type")
        throw ParseError(
            "score header must start with model_id<TAB>model_type");

    ScoreTable table;
    table.task_names.assign(header.begin() + 2, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (next_line(is, line, nullptr)) {
        const auto cells = split_tabs(line);
        if (cells.size() != header.size())
            throw ParseError("score row " + std::to_string(row_no) +
                             " has the wrong cell count");
        table.model_ids.push_back(cells[0]);
        table.group_labels.push_back(cells[1]);
        std::vector<double> vals(cells.size() - 2);
        for (std::size_t c = 2; c < cells.size(); ++c)
            vals[c - 2] = parse_double(cells[c], row_no, c);
        rows.push_back(std::move(vals));
        ++row_no;
    }
    if (rows.empty()) throw ParseError("score file has no rows");
    table.scores.resize(static_cast<Index>(rows.size()),
                        static_cast<Index>(table.task_names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            table.scores(static_cast<Index>(r), static_cast<Index>(c)) =
                rows[r][c];
    return table;
}

Embedding2D read_embedding(const std::filesystem::path& path) {
    std::ifstream is = open_in(path, false);
    Metadata meta;
    std::string line;
    if (!next_line(is, line, &meta)) throw ParseError("empty embedding file");
    if (line != "model_id\tx\ty")
        throw ParseError("unexpected embedding header: " + line);

    std::vector<std::string> ids;
    std::vector<std::pair<double, double>> pts;
    std::size_t row_no = 1;
    while (next_line(is, line, &meta)) {
        const auto cells = split_tabs(line);
        if (cells.size() != 3) throw ParseError("embedding rows need 3 columns");
        ids.push_back(cells[0]);
        pts.emplace_back(parse_double(cells[1], row_no, 1),
                         parse_double(cells[2], row_no, 2));
        ++row_no;
    }
    Embedding2D e;
    e.coords.resize(static_cast<Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        e.coords(static_cast<Index>(i), 0) = pts[i].first;
        e.coords(static_cast<Index>(i), 1) = pts[i].second;
    }
    e.model_ids = std::move(ids);
    if (const std::string* t = meta.find("trial")) e.trial_id = *t;
    return e;
}

void write_embedding(std::ostream& os, const Embedding2D& e, const Metadata& meta) {
    Metadata full = meta;
    if (!e.trial_id.empty()) full.add("trial", e.trial_id);
    write_metadata(os, full);
    os << "model_id\tx\ty\n";
    for (Index i = 0; i < e.coords.rows(); ++i)
        os << e.model_ids[static_cast<std::size_t>(i)] << '\t'
           << fmt_g17(e.coords(i, 0)) << '\t' << fmt_g17(e.coords(i, 1)) << '\n';
}

void write_error_table(std::ostream& os, const std::vector<ErrorReport>& rows,
                       const Metadata& meta) {
    write_metadata(os, meta);
    os << "method\tn\tmean_d\tstd_d\ttau\tkappa_hat\tsigma_hat\ttau2_se\n";
    for (const auto& r : rows) {
        os << method_name(r.method) << '\t' << r.n << '\t' << fmt_g17(r.mean_d)
           << '\t' << fmt_g17(r.std_d) << '\t' << fmt_g17(r.tau) << '\t'
           << (r.kappa_hat ? fmt_g17(*r.kappa_hat) : "NA") << '\t'
           << (r.sigma_hat ? fmt_g17(*r.sigma_hat) : "NA") << '\t'
           << fmt_g17(r.tau_se) << '\n';
    }
}

void write_ellipse_table(std::ostream& os,
                         const std::vector<std::string>& model_ids,
                         const std::vector<EllipseSummary>& ellipses,
                         const Metadata& meta) {
    write_metadata(os, meta);
    os << "model_id\tmean_x\tmean_y\twidth\theight\tangle\n";
    for (std::size_t i = 0; i < ellipses.size(); ++i) {
        const auto& e = ellipses[i];
        os << (i < model_ids.size() ? model_ids[i] : "m" + std::to_string(i))
           << '\t' << fmt_g17(e.mean(0)) << '\t' << fmt_g17(e.mean(1)) << '\t'
           << fmt_g17(e.width) << '\t' << fmt_g17(e.height) << '\t'
           << fmt_g17(e.angle) << '\n';
    }
}

}  // namespace io
}  // namespace modelmap
