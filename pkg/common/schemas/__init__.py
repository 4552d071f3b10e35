from common.schemas.results import CriterionVerdict, ExperimentSummary, KernelCheckReport, SuiteEntry, SuiteReport
