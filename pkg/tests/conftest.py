import pytest

from bucketnlg.config import shipped_config
from bucketnlg.dataset import example_from_record

# Reminder example with its annotated reference (dialog-act indices omitted
# in the reference)
MILK_QUERY = "Do I have any reminder to buy milk ?"
MILK_SCENARIO = (
    "INFORM_1[ amount[ 3 ] ] "
    "INFORM_2[ todo[ buy milk ] date_time[ time[ 7 pm ] ] ] "
    "INFORM_3[ todo[ buy milk ] date_time[ colloquial[ tomorrow ] ] ] "
    "INFORM_4[ amount_remaining[ 1 ] ]"
)
MILK_REFERENCE = (
    "INFORM[ Yes , there are amount[ 3 ] reminders . ] "
    "INFORM[ The first two are , todo[ buy milk ] at date_time[ time[ 7 pm ] ] ] and "
    "INFORM[ date_time[ colloquial[ tomorrow ] ] . ] "
    "INFORM[ There 's amount_remaining[ 1 ] other reminder . ]"
)
MILK_CB = "INFORM_1[ amount ] INFORM_2[ todo date_time ] INFORM_3[ todo date_time ] INFORM_4[ amount_remaining ]"
MILK_MB = (
    "INFORM_1[ amount ] INFORM_2[ todo date_time[ time ] ] "
    "INFORM_3[ todo date_time[ colloquial[ tomorrow ] ] ] INFORM_4[ amount_remaining ]"
)
MILK_FB = (
    "INFORM_1[ amount[ amount__gr1 ] ] "
    "INFORM_2[ todo[ todo__a ] date_time[ time[ time__a ] ] ] "
    "INFORM_3[ todo[ todo__a ] date_time[ colloquial[ tomorrow ] ] ] "
    "INFORM_4[ amount_remaining[ amount_remaining__eq1 ] ]"
)
MILK_DELEX_QUERY = "Do I have any reminder to todo__a ?"

# Weather example with a discourse relation
WEEKEND_QUERY = "How is the weather over the next weekend ?"
WEEKEND_SCENARIO = (
    "INFORM_1[ temp_low[ 20 ] temp_high[ 45 ] date_time[ colloquial[ next weekend ] ] ] "
    "CONTRAST_1[ "
    "INFORM_2[ condition[ sun ] date_time[ weekday[ Saturday ] ] ] "
    "INFORM_3[ condition[ rain ] date_time[ weekday[ Sunday ] ] ] "
    "]"
)
WEEKEND_REFERENCE = (
    "INFORM_1[ date_time[ colloquial[ next weekend ] ] expect a low of temp_low[ 20 ] "
    "and a high of temp_high[ 45 ] . ] "
    "CONTRAST_1[ "
    "INFORM_2[ it will be condition[ sunny ] date_time[ on weekday[ Saturday ] ] ] "
    "but "
    "INFORM_3[ it'll condition[ rain ] date_time[ on weekday[ Sunday ] ] ] "
    ". ]"
)


@pytest.fixture(scope="session")
def reminder():
    return shipped_config("reminder")


@pytest.fixture(scope="session")
def weather():
    return shipped_config("weather")


@pytest.fixture
def milk(reminder):
    return example_from_record(
        {"id": "t3", "domain": "reminder", "query": MILK_QUERY,
         "scenario": MILK_SCENARIO, "reference": MILK_REFERENCE},
        reminder,
    )


@pytest.fixture
def weekend(weather):
    return example_from_record(
        {"id": "t2", "domain": "weather", "query": WEEKEND_QUERY,
         "scenario": WEEKEND_SCENARIO, "reference": WEEKEND_REFERENCE},
        weather,
    )


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
