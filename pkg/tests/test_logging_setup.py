import logging

from almost_prime_lab.logging_setup import log_stage


def test_log_stage_reports_wall_time(caplog):
    logger = logging.getLogger("almost_prime_lab.test")
    with caplog.at_level(logging.INFO, logger="almost_prime_lab.test"):
        with log_stage(logger, "toy"):
            pass
    assert "stage toy:" in caplog.text
