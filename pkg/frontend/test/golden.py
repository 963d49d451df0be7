"""Build the expected model-set document through the library file writer.

Reconstructs the session's initial draft from the same samples, replaces
the row-0 cross entries with the descriptors named in a JSON file, and
writes the validated set with the regular document writer.  The workbench
round-trip test compares the service-persisted file against this one
byte for byte.
"""

import json
import sys

from mcrfsim import build_model_set, validate_model_set, demo
from mcrfsim.io import read_samples_csv, write_modelset
from mcrfsim.models import ModelDescriptor
from mcrfsim.transiograms import LagBinSpec, estimate_experimental

samples_path, row_json_path, out_path = sys.argv[1:4]

samples = read_samples_csv(samples_path)
exp = estimate_experimental(samples, LagBinSpec(demo.BIN_WIDTH, demo.N_BINS))
rest_heads = demo.case_rest_heads(exp.n_classes)
descriptors = demo.math_descriptors(exp, rest_heads)

with open(row_json_path) as fh:
    row0 = json.load(fh)
for head, record in row0.items():
    descriptors[(0, int(head))] = ModelDescriptor(**record)

models = build_model_set(exp, "mathematical", descriptors=descriptors,
                         rest_heads=rest_heads,
                         roles=demo.class_roles(exp.proportions))
report = validate_model_set(models, 2.0 * demo.RADIUS)
if not report.valid:
    sys.exit(f"expected set failed validation: {report.summary()}")
write_modelset(out_path, models)
print("ok")
