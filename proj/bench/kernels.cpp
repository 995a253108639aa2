// Serial reference vs OpenMP for the two data-parallel kernels: marker
// counting over a corpus and multi-file LaTeX extraction.
#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "derivmine/corpus/markers.hpp"
#include "derivmine/texmath/extract.hpp"

using namespace derivmine;

namespace {

const std::vector<std::string> kWords{"the",   "model", "proof",  "we",      "derive", "bound", "lemma",
                                      "holds", "rate",  "assume", "theorem", "Proof.", "and",   "thus"};

std::string synthetic_text(std::mt19937& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += kWords[rng() % kWords.size()];
    out += (i % 17 == 16) ? '\n' : ' ';
  }
  return out;
}

std::string synthetic_latex(std::mt19937& rng, int file, std::size_t blocks) {
  std::string out;
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto n = std::to_string(file) + "_" + std::to_string(b);
    switch (rng() % 4) {
      case 0: out += "\\begin{equation}a_{" + n + "} = b + c^{" + n + "}\\label{eq:" + n + "}\\end{equation}\n"; break;
      case 1: out += "\\begin{align} x &= y_{" + n + "} \\\\ z &= w \\end{align}\n"; break;
      case 2: out += "\\begin{lemma} For all $x$, $f_{" + n + "}(x) \\le 1$. \\end{lemma}\n"; break;
      default: out += "Text with $inline_{" + n + "}$ math and $$d_{" + n + "} = e$$ here.\n";
    }
    out += synthetic_text(rng, 40);
  }
  return out;
}

template <class F>
double best_ms(int repeat, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - t0;
    best = std::min(best, d.count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel timings"};
  std::size_t docs = 2000, words = 4000, files = 64, blocks = 200;
  int repeat = 3, threads = 0;
  unsigned seed = 1;
  app.add_option("--docs", docs, "Documents for marker counting");
  app.add_option("--words", words, "Words per document");
  app.add_option("--files", files, "LaTeX files per document for extraction");
  app.add_option("--blocks", blocks, "Math blocks per LaTeX file");
  app.add_option("--repeat", repeat, "Repetitions; the best time is reported");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  std::mt19937 rng(seed);
  std::vector<std::string> texts;
  texts.reserve(docs);
  for (std::size_t i = 0; i < docs; ++i) texts.push_back(synthetic_text(rng, words / 2 + rng() % words));
  const std::vector<std::string_view> views(texts.begin(), texts.end());
  const auto& lexicon = corpus::default_marker_lexicon();

  std::vector<corpus::MarkerProfile> serial, parallel;
  const double ms_serial = best_ms(repeat, [&] { serial = corpus::count_markers_serial(views, lexicon); });
  const double ms_parallel = best_ms(repeat, [&] { parallel = corpus::count_markers_parallel(views, lexicon); });

  std::vector<std::string> sources_text;
  for (std::size_t f = 0; f < files; ++f) sources_text.push_back(synthetic_latex(rng, static_cast<int>(f), blocks));
  std::vector<texmath::SourceText> sources;
  for (std::size_t f = 0; f < files; ++f) sources.push_back({"f" + std::to_string(f) + ".tex", sources_text[f]});
  texmath::ExtractionReport ex_serial, ex_parallel;
  const double ms_ex_serial = best_ms(repeat, [&] { ex_serial = texmath::extract_document_serial(sources); });
  const double ms_ex_parallel = best_ms(repeat, [&] { ex_parallel = texmath::extract_document(sources); });

  const bool markers_equal = serial == parallel;
  const bool extract_equal = ex_serial.expressions == ex_parallel.expressions;
  std::printf("threads            %d\n", omp_get_max_threads());
  std::printf("markers  %6zu docs  serial %9.2f ms  openmp %9.2f ms  speedup %5.2fx  %s\n", docs, ms_serial,
              ms_parallel, ms_serial / ms_parallel, markers_equal ? "identical" : "MISMATCH");
  std::printf("extract  %6zu files serial %9.2f ms  openmp %9.2f ms  speedup %5.2fx  %s (%zu expressions)\n", files,
              ms_ex_serial, ms_ex_parallel, ms_ex_serial / ms_ex_parallel, extract_equal ? "identical" : "MISMATCH",
              ex_serial.expressions.size());
  return markers_equal && extract_equal ? 0 : 1;
}
