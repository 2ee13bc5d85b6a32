import io
import json
import logging

from geodesic_dcd.utils.log import LOGGER_NAME, configure_logging


def test_records_are_json_lines():
    stream = io.StringIO()
    configure_logging(1, stream=stream)
    logger = logging.getLogger(f"{LOGGER_NAME}.core.geodesic")
    logger.info("fit_done", extra={"data": {"iterations": 3}})
    logger.debug("fit_iteration", extra={"data": {"iteration": 1}})

    lines = stream.getvalue().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert record["level"] == "INFO"
    assert record["step"] == "fit_done"
    assert record["data"] == {"iterations": 3}


def test_verbosity_levels():
    assert configure_logging(0, stream=io.StringIO()).level == logging.WARNING
    assert configure_logging(2, stream=io.StringIO()).level == logging.DEBUG


def test_reconfiguring_replaces_the_handler():
    configure_logging(1, stream=io.StringIO())
    logger = configure_logging(1, stream=io.StringIO())
    assert len(logger.handlers) == 1


def test_exceptions_are_embedded():
    stream = io.StringIO()
    logger = configure_logging(0, stream=stream)
    try:
        raise ValueError("boom")
    except ValueError:
        logger.exception("failed")
    record = json.loads(stream.getvalue())
    assert "boom" in record["data"]["exception"]
