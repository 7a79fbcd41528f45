// Thin Python surface over the core library: log parsing, text and image
// views, the similarity primitives, the synthetic corpus and the CLI driver.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "maldyn/behavior_log.hpp"
#include "maldyn/cli.hpp"
#include "maldyn/error.hpp"
#include "maldyn/similarity.hpp"
#include "maldyn/synth.hpp"
#include "maldyn/transform.hpp"

namespace py = pybind11;
using namespace maldyn;

namespace {

TokenText tokens_of(const std::vector<std::string>& tokens) {
  TokenText t;
  t.tokens = tokens;
  return t;
}

}  // namespace

PYBIND11_MODULE(_maldyn, m) {
  m.doc() = "Behavior-log featurization and generated-sample coverage";

  // Messages carry the error code name as a prefix, e.g. "MalformedXml: ...".
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<Action>(m, "Action")
      .def(py::init<>())
      .def_readwrite("api_name", &Action::api_name)
      .def_readwrite("call_name", &Action::call_name)
      .def_readwrite("call_pid", &Action::call_pid)
      .def_readwrite("call_time", &Action::call_time)
      .def_readwrite("err_code", &Action::err_code)
      .def_readwrite("ret_value", &Action::ret_value)
      .def_readwrite("status_value", &Action::status_value)
      .def_readwrite("api_args", &Action::api_args)
      .def_readwrite("ex_info", &Action::ex_info);

  py::class_<BehaviorLog>(m, "BehaviorLog")
      .def(py::init<>())
      .def_readwrite("sample_id", &BehaviorLog::sample_id)
      .def_readwrite("actions", &BehaviorLog::actions)
      .def("__len__", [](const BehaviorLog& l) { return l.actions.size(); })
      .def("__eq__", [](const BehaviorLog& a, const BehaviorLog& b) { return a == b; });

  py::class_<TokenText>(m, "TokenText")
      .def(py::init<>())
      .def_readwrite("sample_id", &TokenText::sample_id)
      .def_readwrite("tokens", &TokenText::tokens)
      .def_readwrite("sentence_breaks", &TokenText::sentence_breaks);

  py::class_<MalImage>(m, "MalImage")
      .def_readonly("width", &MalImage::width)
      .def_readonly("height", &MalImage::height)
      .def_property_readonly("pixels", [](const MalImage& img) {
        return py::bytes(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
      });

  m.def("parse_log", [](const std::string& xml) { return parse_log(xml); }, py::arg("xml"));
  m.def("load_log", [](const std::filesystem::path& p) { return load_log(p); }, py::arg("path"));
  m.def("to_xml", &to_xml, py::arg("log"));
  m.def("to_token_text", [](const BehaviorLog& log) { return to_token_text(log); }, py::arg("log"));
  m.def("serialize_tokens", &serialize_tokens, py::arg("text"));
  m.def("sample_to_image", [](const BehaviorLog& log) { return sample_to_image(log); }, py::arg("log"));
  m.def("to_pgm", [](const MalImage& img) { return py::bytes(to_pgm(img)); }, py::arg("image"));

  m.def("cosine_sim", [](const std::vector<double>& u, const std::vector<double>& v) { return cosine_sim(u, v); });
  m.def("bleu", [](const std::vector<std::string>& c, const std::vector<std::string>& r, int order) {
    return bleu(tokens_of(c), tokens_of(r), order);
  }, py::arg("candidate"), py::arg("reference"), py::arg("order") = 4);
  m.def("wasserstein_1d", [](const std::vector<double>& p, const std::vector<double>& q) { return wasserstein_1d(p, q); });
  m.def("kl_div", [](const std::vector<double>& p, const std::vector<double>& q) { return kl_div(p, q); });
  m.def("js_div", [](const std::vector<double>& p, const std::vector<double>& q) { return js_div(p, q); });
  m.def("text_similarity", [](const TokenText& a, const TokenText& b) { return text_similarity(a, b, SimilarityConfig{}); });
  m.def("image_similarity", [](const MalImage& a, const MalImage& b) { return image_similarity(a, b, SimilarityConfig{}); });
  m.def("hybrid_similarity", [](const TokenText& a, const TokenText& b) { return hybrid_similarity(a, b, SimilarityConfig{}); });

  m.def("synthetic_corpus", [](std::size_t n_benign, std::size_t n_malware, std::size_t families, std::uint64_t seed) {
    return make_synthetic_corpus({n_benign, n_malware, families, seed}).logs;
  }, py::arg("n_benign") = 100, py::arg("n_malware") = 100, py::arg("families") = 4, py::arg("seed") = 42);
  m.def("write_synthetic_corpus", [](const std::filesystem::path& out, std::size_t n_benign, std::size_t n_malware,
                                     std::size_t families, std::uint64_t seed) {
    return write_synthetic_corpus(make_synthetic_corpus({n_benign, n_malware, families, seed}), out);
  }, py::arg("out_dir"), py::arg("n_benign") = 100, py::arg("n_malware") = 100, py::arg("families") = 4,
        py::arg("seed") = 42);

  // Returns (exit_code, stdout, stderr) without touching the process streams.
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
