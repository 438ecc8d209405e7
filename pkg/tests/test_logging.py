import json
import logging

from ccnp_lab.logging_config import JobContextFilter, build_formatter, job_context
from ccnp_lab.schemas import VariantKind
from ccnp_lab.tasks.run_tasks import Job, JobKind, execute_job


def make_record(message="hello"):
    return logging.LogRecord("ccnp_lab.test", logging.INFO, __file__, 1, message, None, None)


def test_records_outside_a_job_have_empty_context():
    record = make_record()
    JobContextFilter().filter(record)
    assert (record.run_id, record.experiment, record.variant, record.seed) == ("", "", "", "")


def test_job_context_reaches_json_lines():
    with job_context("sine_5shot", "CCNP", 3) as ctx:
        record = make_record("epoch done")
        JobContextFilter().filter(record)
    line = json.loads(build_formatter(json_format=True).format(record))
    assert line["experiment"] == "sine_5shot"
    assert line["variant"] == "CCNP"
    assert line["seed"] == 3
    assert line["run_id"] == ctx.run_id
    assert ctx.run_id.startswith("CCNP-s3-")
    assert line["message"] == "epoch done"


def test_plain_format_carries_job_context():
    with job_context("lv_greek", "CNP", 1):
        record = make_record()
        JobContextFilter().filter(record)
    text = build_formatter(json_format=False).format(record)
    assert "[lv_greek CNP s1 CNP-s1-" in text


def test_context_is_reset_after_the_job():
    with job_context("gp_rbf", "AttnCNP", 0):
        pass
    record = make_record()
    JobContextFilter().filter(record)
    assert record.experiment == ""


def test_execute_job_logs_with_its_context(caplog, tiny_experiment, sine_dataset, tmp_path):
    caplog.handler.addFilter(JobContextFilter())
    job = Job(kind=JobKind.EVAL, config=tiny_experiment, variant=VariantKind.CNP, seed=1,
              dataset=sine_dataset, run_dir=tmp_path / "CNP-s1")
    with caplog.at_level(logging.INFO, logger="ccnp_lab"):
        result = execute_job(job)
    assert not result.ok
    job_records = [r for r in caplog.records if r.name == "ccnp_lab.tasks.run_tasks"]
    assert job_records
    for record in job_records:
        assert record.experiment == tiny_experiment.name
        assert record.variant == "CNP"
        assert record.seed == 1
        assert record.run_id == result.run_id
