import numpy as np
import pytest

from basketsim import BasketData, DesignSpec, Look, PriorSpec


# worked five-basket dataset used across the weight-engine tests
FIVE_Y = (2, 9, 11, 13, 20)
FIVE_N = (25, 25, 25, 25, 25)

# vemurafenib BRAF V600 basket study: NSCLC, CRC vemu, CRC vemu+cetu,
# bile duct, ECD or LCH, ATC
BRAF_Y = (8, 0, 1, 1, 6, 2)
BRAF_N = (19, 10, 26, 8, 14, 7)
BRAF_NAMES = ("NSCLC", "CRC vemu", "CRC vemu+cetu", "Bile duct", "ECD or LCH", "ATC")


@pytest.fixture
def five_basket_data():
    return BasketData.all_active(FIVE_Y, FIVE_N)


@pytest.fixture
def jeffreys_prior():
    return PriorSpec.shared(0.5, 0.5, 5)


@pytest.fixture
def one_subject_prior():
    # mean at the null rate, worth one subject of information
    return PriorSpec.shared(0.15, 0.85, 5)


@pytest.fixture
def braf_data():
    return BasketData.all_active(BRAF_Y, BRAF_N)


@pytest.fixture
def braf_prior():
    return PriorSpec.shared(0.15, 0.85, 6)


@pytest.fixture
def equal_design():
    # five baskets of 25 with one futility look: stop at <= 1 response of 10
    return DesignSpec.equal(5, 25, [Look(10, 1)], p0=0.15, alpha=0.1)


@pytest.fixture
def unequal_design():
    # basket 3 enrolls only 8 and never has an interim look
    return DesignSpec(
        (26, 16, 8, 17, 22),
        ((Look(10, 1),), (Look(10, 1),), (), (Look(10, 1),), (Look(10, 1),)),
        p0=0.15,
        alpha=0.1,
    )


@pytest.fixture
def braf_design():
    return DesignSpec(
        BRAF_N,
        ((),) * 6,
        p0=0.15,
        alpha=0.05,
        names=BRAF_NAMES,
    )


def assert_matrix_close(actual, expected, atol):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    assert actual.shape == expected.shape
    worst = np.abs(actual - expected).max()
    assert worst <= atol, f"max entry deviation {worst:.4f} > {atol}\n{actual}\nvs\n{expected}"
