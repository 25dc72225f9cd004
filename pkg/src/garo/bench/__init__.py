from .instances import (DataModelSpec, KnapsackInstanceSpec, data_moments, derive_seed, generate_instance,
                        sample_data)
from .report import emit_csv, read_csv
from .suite import (CurveSample, ExperimentReport, MethodGrid, ReportRow, SuiteConfig, evaluate, prepare_cell,
                    run_cell, run_suite)
