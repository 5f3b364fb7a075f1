from confoundverse.exceptions.ex_krcd import *
from confoundverse.config.settings import SettingsError
