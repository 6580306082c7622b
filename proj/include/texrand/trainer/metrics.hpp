#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/trainer/seg_model.hpp"

namespace texrand::trainer {

struct IouResult {
  std::vector<std::optional<double>> per_class;  // nullopt: class absent from both maps
  double mean = 0.0;
};

// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes)
      : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    detail::require(num_classes >= 1, ErrorKind::invalid_parameter, "ConfusionMatrix: need at least one class");
  }

  void add(const LabelMap& pred, const LabelMap& gt) {
    detail::require(pred.height == gt.height && pred.width == gt.width, ErrorKind::invalid_shape,
                    "miou: prediction and ground truth differ in size");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      detail::require(pred.labels[i] < n_ && gt.labels[i] < n_, ErrorKind::invalid_parameter,
                      "miou: label exceeds class count");
      ++counts_[static_cast<std::size_t>(gt.labels[i]) * n_ + pred.labels[i]];
    }
  }

  std::uint64_t at(int truth, int predicted) const { return counts_[static_cast<std::size_t>(truth) * n_ + predicted]; }
  int num_classes() const { return n_; }

  // IoU_c = TP / (TP + FP + FN); the mean skips classes with an empty union.
  IouResult iou() const {
    IouResult r;
    r.per_class.resize(static_cast<std::size_t>(n_));
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < n_; ++c) {
      std::uint64_t row = 0, colsum = 0;
      for (int k = 0; k < n_; ++k) {
        row += at(c, k);
        colsum += at(k, c);
      }
      const std::uint64_t tp = at(c, c);
      const std::uint64_t uni = row + colsum - tp;
      if (uni == 0) continue;
      r.per_class[c] = static_cast<double>(tp) / static_cast<double>(uni);
      sum += *r.per_class[c];
      ++present;
    }
    detail::require(present > 0, ErrorKind::degenerate, "miou: every class has an empty union");
    r.mean = sum / present;
    return r;
  }

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
};

inline IouResult miou(const LabelMap& pred, const LabelMap& gt, int num_classes) {
  ConfusionMatrix cm(num_classes);
  cm.add(pred, gt);
  return cm.iou();
}

}  // namespace texrand::trainer
