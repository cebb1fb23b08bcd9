#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "modelmap/errors.hpp"
#include "modelmap/types.hpp"

namespace modelmap {
namespace io {

// Shortest decimal rendering with 17 significant digits; round-trips every
// finite double bit-exactly.
std::string fmt_g17(double v);

// Ordered key/value pairs emitted as `# key<TAB>value` comment lines ahead
// of each table. Readers skip or mine them; they never affect parsing.
class Metadata {
public:
    void add(std::string key, std::string value);
    void add(std::string key, double value);
    void add(std::string key, std::uint64_t value);
    const std::string* find(const std::string& key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

void write_metadata(std::ostream& os, const Metadata& meta);

enum class MatrixFormat { delimited, binary, autodetect };

// Delimited layout: optional metadata lines, then a header row of text ids
// with a corner label, then one row per model (model id + K*N values).
// Binary layout: magic "MMAP1", version byte 1, u64-LE K and N, then K*N
// f64-LE values row-major.
LikelihoodMatrix read_matrix(const std::filesystem::path& path,
                             MatrixFormat format = MatrixFormat::autodetect);
LikelihoodMatrix read_matrix_delimited(std::istream& is);
LikelihoodMatrix read_matrix_binary(std::istream& is);
void write_matrix(const std::filesystem::path& path, const LikelihoodMatrix& L,
                  const Metadata& meta, MatrixFormat format = MatrixFormat::delimited);
void write_matrix_delimited(std::ostream& os, const LikelihoodMatrix& L,
                            const Metadata& meta);
void write_matrix_binary(std::ostream& os, const LikelihoodMatrix& L);

// Square tables (distances, KL estimates) and coordinate tables share the
// matrix layout with explicit row/column ids.
void write_square_table(std::ostream& os, const Matrix& values,
                        const std::vector<std::string>& ids,
                        const Metadata& meta);

void write_plan(std::ostream& os, const SamplingPlan& plan,
                const std::vector<std::string>& text_ids, const Metadata& meta);
SamplingPlan read_plan(std::istream& is, std::vector<std::string>* text_ids = nullptr);
SamplingPlan read_plan(const std::filesystem::path& path,
                       std::vector<std::string>* text_ids = nullptr);

void write_draw(std::ostream& os, const ResampleDraw& draw,
                const std::vector<std::string>& text_ids, const Metadata& meta);
ResampleDraw read_draw(std::istream& is, std::vector<std::string>* text_ids = nullptr);
ResampleDraw read_draw(const std::filesystem::path& path,
                       std::vector<std::string>* text_ids = nullptr);

// Header: model_id <TAB> model_type <TAB> task...; one row per model.
ScoreTable read_scores(const std::filesystem::path& path);

Embedding2D read_embedding(const std::filesystem::path& path);
void write_embedding(std::ostream& os, const Embedding2D& e, const Metadata& meta);

void write_error_table(std::ostream& os, const std::vector<ErrorReport>& rows,
                       const Metadata& meta);

void write_ellipse_table(std::ostream& os,
                         const std::vector<std::string>& model_ids,
                         const std::vector<EllipseSummary>& ellipses,
                         const Metadata& meta);

}  // namespace io
}  // namespace modelmap
