import java.util.Scanner;

public class Main {
    static class Account {
        private long balance;

        Account(long initial) {
            balance = initial;
        }

        boolean withdraw(long amount) {
            if (amount > balance) {
                return false;
            }
            balance -= amount;
            return true;
        }

        void deposit(long amount) {
            balance += amount;
        }

        long getBalance() {
            return balance;
        }
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        Account acct = new Account(sc.nextLong());
        int ops = sc.nextInt();
        int failed = 0;
        for (int i = 0; i < ops; i++) {
            String kind = sc.next();
            long amount = sc.nextLong();
            if (kind.equals("D")) {
                acct.deposit(amount);
            } else if (!acct.withdraw(amount)) {
                failed++;
            }
        }
        System.out.println(acct.getBalance() + " " + failed);
    }
}
