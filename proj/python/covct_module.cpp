#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "covct/image_io.hpp"
#include "covct/infer.hpp"
#include "covct/metrics.hpp"
#include "covct/model.hpp"
#include "covct/schedule.hpp"
#include "covct/scorecam.hpp"
#include "covct/segmentation.hpp"

namespace py = pybind11;
using namespace covct;

namespace {

Raster raster_from_u16(py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D uint16 array");
    Raster r(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), PixelFormat::Gray16);
    std::copy(a.data(), a.data() + a.size(), r.samples.begin());
    return r;
}

Raster raster_from_u8(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() == 2) {
        Raster r(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), PixelFormat::Gray8);
        std::copy(a.data(), a.data() + a.size(), r.samples.begin());
        return r;
    }
    if (a.ndim() == 3 && (a.shape(2) == 3 || a.shape(2) == 4)) {
        Raster r(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                 a.shape(2) == 3 ? PixelFormat::Rgb8 : PixelFormat::Rgba8);
        std::copy(a.data(), a.data() + a.size(), r.samples.begin());
        return r;
    }
    throw py::value_error("expected HxW, HxWx3 or HxWx4 uint8 array");
}

py::array to_numpy(const Raster& r) {
    const int ch = channels(r.format);
    if (r.format == PixelFormat::Gray16) {
        py::array_t<std::uint16_t> out({r.height, r.width});
        std::copy(r.samples.begin(), r.samples.end(), out.mutable_data());
        return out;
    }
    std::vector<py::ssize_t> shape{r.height, r.width};
    if (ch > 1) shape.push_back(ch);
    py::array_t<std::uint8_t> out(shape);
    auto* dst = out.mutable_data();
    for (std::size_t i = 0; i < r.samples.size(); ++i)
        dst[i] = static_cast<std::uint8_t>(r.samples[i]);
    return out;
}

py::array mask_to_numpy(const BinaryMask& m) {
    py::array_t<std::uint8_t> out({m.height, m.width});
    std::copy(m.bits.begin(), m.bits.end(), out.mutable_data());
    return out;
}

py::array tensor_to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_covct, m) {
    m.doc() = "CT analysis pipeline: normalization, lung segmentation, CNN inference, "
              "selective parallel heatmaps and evaluation metrics";

    m.def("minmax_normalize",
          [](py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast> img) {
              Raster r = raster_from_u16(img);
              return to_numpy(minmax_normalize(r, observed_range(r)));
          },
          py::arg("image"), "Min-max normalize a 16-bit image to span [0, 65535].");

    m.def("quantize_to_8bit",
          [](py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast> img) {
              return to_numpy(quantize_to_8bit(raster_from_u16(img)));
          },
          py::arg("image"));

    m.def("to_grayscale",
          [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img) {
              return to_numpy(to_grayscale(raster_from_u8(img)));
          },
          py::arg("image"));

    m.def("resize_bilinear",
          [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img, int w, int h) {
              return to_numpy(resize_bilinear(raster_from_u8(img), w, h));
          },
          py::arg("image"), py::arg("width"), py::arg("height"));

    m.def("otsu_threshold",
          [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img) {
              return otsu_threshold(raster_from_u8(img));
          },
          py::arg("image"));

    m.def("segment_lungs",
          [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img) {
              SegmentationResult s = segment_lungs(raster_from_u8(img));
              py::dict out;
              out["mask"] = mask_to_numpy(s.mask);
              out["segmented"] = to_numpy(s.segmented);
              out["enlarged"] = to_numpy(s.enlarged);
              out["bbox"] = py::make_tuple(s.bbox.x, s.bbox.y, s.bbox.w, s.bbox.h);
              return out;
          },
          py::arg("image"));

    py::class_<ModelBundle>(m, "Model")
        .def_property_readonly("input_hw", [](const ModelBundle& b) {
            return py::make_tuple(b.input_h, b.input_w);
        })
        .def("save", [](const ModelBundle& b, const std::string& path) { save_model(path, b); })
        .def("forward",
             [](const ModelBundle& b,
                py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img,
                int threads) {
                 ActivationOutput out = forward(b, raster_from_u8(img), ForwardOptions{threads});
                 return py::make_tuple(py::make_tuple(out.probs[0], out.probs[1]),
                                       tensor_to_numpy(out.last_conv));
             },
             py::arg("image"), py::arg("threads") = 6);

    m.def("build_micronet", &build_micronet, py::arg("num_maps"), py::arg("seed"),
          py::arg("input_hw") = 64);
    m.def("load_model", &load_model, py::arg("path"));

    m.def("scorecam",
          [](const ModelBundle& model,
             py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> img,
             int stride, int workers, int target_class) {
              CamConfig cfg;
              cfg.stride = stride;
              cfg.workers = workers;
              cfg.target_class = target_class;
              CamMap cam = scorecam(model, raster_from_u8(img), cfg);
              py::dict out;
              out["values"] = to_numpy(cam.values);
              out["weights"] = cam.weights;
              out["selected_indices"] = cam.selected_indices;
              out["heatmap_rgb"] = to_numpy(colorize(cam));
              return out;
          },
          py::arg("model"), py::arg("image"), py::arg("stride") = 4, py::arg("workers") = 8,
          py::arg("target_class") = 0);

    m.def("select_maps", &select_maps, py::arg("num_maps"), py::arg("stride"));
    m.def("partition_work", &partition_work, py::arg("indices"), py::arg("workers"));

    m.def("derive_metrics",
          [](long long tp, long long fp, long long tn, long long fn) {
              DerivedMetrics d = derive_metrics(ConfusionMatrix{tp, fp, tn, fn, 0});
              py::dict out;
              auto put = [&](const char* k, const std::optional<double>& v) {
                  out[k] = v ? py::cast(*v) : py::none();
              };
              put("accuracy", d.accuracy);
              put("specificity", d.specificity);
              put("sensitivity", d.sensitivity);
              put("precision", d.precision);
              put("f1", d.f1);
              return out;
          },
          py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def("roc_auc",
          [](const std::vector<double>& scores, const std::vector<int>& labels, int positive) {
              RocCurve r = roc_auc(scores, labels, positive);
              return py::make_tuple(r.points, r.auc);
          },
          py::arg("scores"), py::arg("labels"), py::arg("positive") = 0);

    m.def("accuracy_ci",
          [](double accuracy, long long n, int confidence) {
              ConfidenceLevel lvl;
              if (confidence == 90) lvl = ConfidenceLevel::P90;
              else if (confidence == 95) lvl = ConfidenceLevel::P95;
              else if (confidence == 99) lvl = ConfidenceLevel::P99;
              else throw py::value_error("confidence must be 90, 95 or 99");
              return accuracy_ci(accuracy, n, lvl);
          },
          py::arg("accuracy"), py::arg("n"), py::arg("confidence"));

    m.def("replay_early_stopping",
          [](const std::vector<double>& losses, int patience) {
              ScheduleState s;
              for (double l : losses) {
                  s = early_stopping_step(s, l, patience);
                  if (s.stopped) break;
              }
              py::dict out;
              out["stopped"] = s.stopped;
              out["best_epoch"] = s.best_epoch;
              out["epochs_run"] = s.epoch;
              return out;
          },
          py::arg("losses"), py::arg("patience") = 5);

    m.def("replay_plateau_lr",
          [](const std::vector<double>& losses, int patience, double factor) {
              ScheduleState s;
              for (double l : losses) s = plateau_lr_step(s, l, patience, factor);
              return s.current_lr;
          },
          py::arg("losses"), py::arg("patience") = 3, py::arg("factor") = 0.2);
}
